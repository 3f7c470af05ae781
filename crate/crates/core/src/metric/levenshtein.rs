//! Edit distance and deterministic Levenshtein automata.

use std::collections::HashMap;
use std::collections::VecDeque;

use thiserror::Error;

/// Largest supported automaton radius.
pub const MAX_RADIUS: u32 = 4;

/// Unit-cost edit distance (dynamic programming).
pub fn levenshtein(a: &[u8], b: &[u8]) -> usize {
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = (diag + (ca != cb) as usize).min(up + 1).min(row[j] + 1);
            diag = up;
        }
    }
    row[b.len()]
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("automaton radius {0} outside 1..=4")]
pub struct RadiusError(pub u32);

/// DFA accepting `{ i | lvst(i, target) < radius }`.
///
/// States are rows of the edit-distance table clipped at `radius`; the input
/// alphabet is collapsed to the target's distinct bytes plus one class for
/// every other byte.
#[derive(Clone, Debug)]
pub struct LevenshteinAutomaton {
    target: Vec<u8>,
    radius: u32,
    class_of: [u8; 256],
    classes: usize,
    trans: Vec<u32>,
    accepting: Vec<bool>,
    dead: Option<u32>,
}

impl LevenshteinAutomaton {
    pub fn build(target: &[u8], radius: u32) -> Result<LevenshteinAutomaton, RadiusError> {
        if !(1..=MAX_RADIUS).contains(&radius) {
            return Err(RadiusError(radius));
        }
        let cap = radius as u8; // any value >= radius is "too far"
        let mut class_of = [0u8; 256];
        let mut reps = vec![None]; // class 0: bytes not in target
        for &b in target {
            if class_of[b as usize] == 0 {
                class_of[b as usize] = reps.len() as u8;
                reps.push(Some(b));
            }
        }
        let classes = reps.len();

        let init: Vec<u8> = (0..=target.len()).map(|j| (j as u8).min(cap)).collect();
        let mut ids: HashMap<Vec<u8>, u32> = HashMap::new();
        let mut rows: Vec<Vec<u8>> = Vec::new();
        let mut queue = VecDeque::new();
        ids.insert(init.clone(), 0);
        rows.push(init);
        queue.push_back(0u32);
        let mut trans: Vec<u32> = Vec::new();
        while let Some(s) = queue.pop_front() {
            let row = rows[s as usize].clone();
            let base = s as usize * classes;
            if trans.len() < base + classes {
                trans.resize(base + classes, 0);
            }
            for (cls, rep) in reps.iter().enumerate() {
                let mut next = Vec::with_capacity(row.len());
                next.push((row[0] + 1).min(cap));
                for j in 1..row.len() {
                    let sub = row[j - 1] + (Some(target[j - 1]) != *rep) as u8;
                    let v = sub.min(row[j] + 1).min(next[j - 1] + 1).min(cap);
                    next.push(v);
                }
                let id = match ids.get(&next) {
                    Some(&id) => id,
                    None => {
                        let id = rows.len() as u32;
                        ids.insert(next.clone(), id);
                        rows.push(next);
                        queue.push_back(id);
                        id
                    }
                };
                trans[base + cls] = id;
            }
        }
        let accepting: Vec<bool> = rows.iter().map(|r| r[target.len()] < cap).collect();
        let dead = rows.iter().position(|r| r.iter().all(|&v| v >= cap)).map(|d| d as u32);
        Ok(LevenshteinAutomaton {
            target: target.to_vec(),
            radius,
            class_of,
            classes,
            trans,
            accepting,
            dead,
        })
    }

    pub fn target(&self) -> &[u8] {
        &self.target
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn start(&self) -> u32 {
        0
    }

    pub fn step(&self, state: u32, b: u8) -> u32 {
        self.trans[state as usize * self.classes + self.class_of[b as usize] as usize]
    }

    pub fn is_accepting(&self, state: u32) -> bool {
        self.accepting[state as usize]
    }

    /// The rejecting sink, if one was reached. It maps to itself on every byte.
    pub fn dead_state(&self) -> Option<u32> {
        self.dead
    }

    pub fn accepts(&self, input: &[u8]) -> bool {
        let mut s = 0u32;
        for &b in input {
            s = self.trans[s as usize * self.classes + self.class_of[b as usize] as usize];
            if Some(s) == self.dead {
                return false;
            }
        }
        self.accepting[s as usize]
    }
}
