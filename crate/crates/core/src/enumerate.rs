//! Cost-ordered bottom-up enumeration into a factorized program bank.
//!
//! Programs are produced level by level (cost 1, 2, …). Within a level the
//! order is: learned programs (cost 1 only), then by operator rank (first
//! appearance in the grammar), then children compared left to right by the
//! same order.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::ast::{validate_grammar, Diagnostic, Grammar, NtId, Nonterminal, Op, Program, Sketch};
use crate::metric::{Ball, EquivKey, LiftedOrimetric};
use crate::semantics::{apply_builtin, output_vector, ExampleSet, OutputVector, Value};

/// Set of nonterminals as a bitmask.
pub type NtSet = u128;

pub const MAX_NONTERMINALS: usize = 128;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnumError {
    #[error("invalid grammar: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Grammar(Vec<Diagnostic>),
    #[error("grammar needs {0} nonterminals after flattening; at most 128 are supported")]
    TooManyNonterminals(usize),
}

/// A flattened production `lhs -> op(args…)`.
#[derive(Clone, Debug)]
pub struct App {
    pub lhs: NtId,
    pub op: Op,
    pub args: Vec<NtId>,
}

/// Grammar with every production of the form `A -> B`, `A -> leaf` or
/// `A -> op(B1, …, Bk)`. Nested right-hand sides get auxiliary nonterminals.
#[derive(Clone, Debug)]
pub struct FlatGrammar {
    pub nonterminals: Vec<Nonterminal>,
    pub start: NtId,
    /// Leaf operators in rank order with the nonterminals deriving them.
    pub leaves: Vec<(Op, NtSet)>,
    /// Application productions grouped by operator, groups in rank order.
    pub apps: Vec<Vec<App>>,
    /// `up[b]`: nonterminals deriving `b` through unit productions (incl. `b`).
    up: Vec<NtSet>,
    rank: HashMap<Op, u32>,
    max_arity: usize,
}

impl FlatGrammar {
    pub fn new(g: &Grammar) -> Result<FlatGrammar, EnumError> {
        validate_grammar(g).map_err(EnumError::Grammar)?;
        let terminals = g.terminals();
        let rank: HashMap<Op, u32> =
            terminals.iter().enumerate().map(|(i, op)| (op.clone(), i as u32)).collect();

        let mut nonterminals = g.nonterminals.clone();
        let mut chains = Vec::new();
        let mut leaf_prods: Vec<(NtId, Op)> = Vec::new();
        let mut app_prods: Vec<App> = Vec::new();
        let mut aux = 0usize;
        for p in &g.productions {
            flatten(p.lhs, &p.rhs, &mut nonterminals, &mut aux, &mut chains, &mut leaf_prods, &mut app_prods);
        }
        if nonterminals.len() > MAX_NONTERMINALS {
            return Err(EnumError::TooManyNonterminals(nonterminals.len()));
        }
        let n = nonterminals.len();
        let mut up: Vec<NtSet> = (0..n).map(|b| 1u128 << b).collect();
        loop {
            let mut changed = false;
            for &(a, b) in &chains {
                // a -> b, so anything deriving a also derives whatever b derives
                for u in up.iter_mut().take(n) {
                    if *u & (1 << b) != 0 && *u & (1 << a) == 0 {
                        *u |= 1 << a;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }

        let mut g2 = FlatGrammar {
            nonterminals,
            start: g.start,
            leaves: Vec::new(),
            apps: Vec::new(),
            up,
            rank,
            max_arity: 0,
        };
        for op in &terminals {
            let direct: NtSet = leaf_prods
                .iter()
                .filter(|(_, o)| o == op)
                .fold(0, |acc, (a, _)| acc | 1 << a);
            if direct != 0 {
                let set = g2.close(direct);
                g2.leaves.push((op.clone(), set));
            }
            let group: Vec<App> = app_prods.iter().filter(|a| &a.op == op).cloned().collect();
            if !group.is_empty() {
                g2.max_arity = g2.max_arity.max(op.arity());
                g2.apps.push(group);
            }
        }
        Ok(g2)
    }

    fn close(&self, set: NtSet) -> NtSet {
        let mut out = set;
        for b in 0..self.nonterminals.len() {
            if set & (1 << b) != 0 {
                out |= self.up[b];
            }
        }
        out
    }

    pub fn rank(&self, op: &Op) -> u32 {
        self.rank.get(op).copied().unwrap_or(u32::MAX)
    }

    pub fn max_arity(&self) -> usize {
        self.max_arity
    }

    /// Nonterminals deriving `op(children)` given the children's sets.
    pub fn app_nts(&self, op: &Op, children: &[NtSet]) -> NtSet {
        let Some(group) = self.apps.iter().find(|g| &g[0].op == op) else {
            return 0;
        };
        let direct = group
            .iter()
            .filter(|a| a.args.iter().zip(children).all(|(b, s)| s & (1 << b) != 0))
            .fold(0, |acc, a| acc | 1 << a.lhs);
        self.close(direct)
    }

    /// Nonterminals from which `p` is derivable (0 if none).
    pub fn nts_of(&self, p: &Program) -> NtSet {
        if p.is_leaf() {
            return self
                .leaves
                .iter()
                .find(|(op, _)| op == p.op())
                .map(|(_, s)| *s)
                .unwrap_or(0);
        }
        let cs: Vec<NtSet> = p.children().iter().map(|c| self.nts_of(c)).collect();
        self.app_nts(p.op(), &cs)
    }

    pub fn derives(&self, p: &Program) -> bool {
        self.nts_of(p) & (1 << self.start) != 0
    }
}

fn flatten(
    lhs: NtId,
    rhs: &Sketch,
    nts: &mut Vec<Nonterminal>,
    aux: &mut usize,
    chains: &mut Vec<(NtId, NtId)>,
    leaves: &mut Vec<(NtId, Op)>,
    apps: &mut Vec<App>,
) {
    match rhs {
        Sketch::Hole(b) => chains.push((lhs, *b)),
        Sketch::Node(op, cs) if cs.is_empty() => leaves.push((lhs, op.clone())),
        Sketch::Node(op, cs) => {
            let mut args = Vec::new();
            for c in cs {
                match c {
                    Sketch::Hole(b) => args.push(*b),
                    Sketch::Node(..) => {
                        let sort = child_sort(c, nts);
                        *aux += 1;
                        let id = nts.len();
                        nts.push(Nonterminal { name: format!("{}${aux}", nts[lhs].name), sort });
                        flatten(id, c, nts, aux, chains, leaves, apps);
                        args.push(id);
                    }
                }
            }
            apps.push(App { lhs, op: op.clone(), args });
        }
    }
}

fn child_sort(s: &Sketch, nts: &[Nonterminal]) -> crate::ast::Sort {
    match s {
        Sketch::Hole(b) => nts[*b].sort,
        Sketch::Node(op, cs) => {
            let sorts: Vec<_> = cs.iter().map(|c| child_sort(c, nts)).collect();
            op.result_sort(&sorts).expect("validated grammar")
        }
    }
}

/// Enumeration order: cost, then learned programs first, then operator rank,
/// then children left to right.
#[derive(Clone, Debug, Default)]
pub struct CostModel {
    learned: Vec<Program>,
    index: HashMap<Program, usize>,
}

impl CostModel {
    pub fn new() -> CostModel {
        CostModel::default()
    }

    /// Treat `p` as a leaf of cost 1. Returns false if already promoted.
    pub fn promote(&mut self, p: Program) -> bool {
        if self.index.contains_key(&p) {
            return false;
        }
        self.index.insert(p.clone(), self.learned.len());
        self.learned.push(p);
        true
    }

    pub fn learned(&self) -> &[Program] {
        &self.learned
    }

    pub fn is_learned(&self, p: &Program) -> bool {
        self.index.contains_key(p)
    }

    pub fn cost(&self, p: &Program) -> u32 {
        if self.index.contains_key(p) {
            1
        } else {
            1 + p.children().iter().map(|c| self.cost(c)).sum::<u32>()
        }
    }

    pub fn compare(&self, g: &FlatGrammar, a: &Program, b: &Program) -> Ordering {
        self.cost(a).cmp(&self.cost(b)).then_with(|| self.compare_same_cost(g, a, b))
    }

    fn compare_same_cost(&self, g: &FlatGrammar, a: &Program, b: &Program) -> Ordering {
        if a == b {
            return Ordering::Equal;
        }
        match (self.index.get(a), self.index.get(b)) {
            (Some(x), Some(y)) => return x.cmp(y),
            (Some(_), None) => return Ordering::Less,
            (None, Some(_)) => return Ordering::Greater,
            (None, None) => {}
        }
        g.rank(a.op()).cmp(&g.rank(b.op())).then_with(|| {
            for (x, y) in a.children().iter().zip(b.children()) {
                let o = self.compare(g, x, y);
                if o != Ordering::Equal {
                    return o;
                }
            }
            Ordering::Equal
        })
    }
}

/// A kept program.
#[derive(Clone, Debug)]
pub struct Entry {
    pub program: Program,
    pub outputs: OutputVector,
    pub cost: u32,
    pub nts: NtSet,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct LevelStats {
    pub enumerated: u64,
    pub kept: u64,
    pub pruned_ball: u64,
    pub pruned_equiv: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InsertOutcome {
    Kept(usize),
    PrunedBall,
    PrunedEquiv,
}

/// What the bank admits.
#[derive(Clone, Debug)]
pub struct Pruning {
    /// `None` disables ball pruning.
    pub ball: Option<Ball>,
    /// Programs of cost at most this stay in the ball regardless of distance.
    pub size_threshold: usize,
    /// Metric whose induced equivalence factorizes the bank; `None` keeps everything.
    pub equivalence: Option<LiftedOrimetric>,
}

/// Factorized set of kept programs, grouped by cost and nonterminal.
#[derive(Debug, Default)]
pub struct ProgramBank {
    entries: Vec<Entry>,
    /// `pools[cost][nt]`: entry indices in enumeration order.
    pools: Vec<Vec<Vec<usize>>>,
    equiv: HashMap<EquivKey, usize>,
    by_output: HashMap<OutputVector, usize>,
    levels: Vec<LevelStats>,
    n_nts: usize,
}

/// A program produced by the enumerator, not yet admitted.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub program: Program,
    pub outputs: OutputVector,
    pub cost: u32,
    pub nts: NtSet,
}

impl ProgramBank {
    pub fn new(n_nts: usize) -> ProgramBank {
        ProgramBank { n_nts, ..Default::default() }
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &Entry {
        &self.entries[i]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pool(&self, nt: NtId, cost: u32) -> &[usize] {
        self.pools
            .get(cost as usize)
            .and_then(|p| p.get(nt))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// First kept program with exactly these outputs on every example.
    pub fn lookup_outputs(&self, outputs: &[Value]) -> Option<usize> {
        self.by_output.get(outputs).copied()
    }

    pub fn levels(&self) -> &[LevelStats] {
        &self.levels
    }

    /// Kept count per cost, index 0 is cost 1.
    pub fn kept_per_level(&self) -> Vec<u64> {
        self.levels.iter().skip(1).map(|l| l.kept).collect()
    }

    pub fn totals(&self) -> LevelStats {
        self.levels.iter().fold(LevelStats::default(), |a, l| LevelStats {
            enumerated: a.enumerated + l.enumerated,
            kept: a.kept + l.kept,
            pruned_ball: a.pruned_ball + l.pruned_ball,
            pruned_equiv: a.pruned_equiv + l.pruned_equiv,
        })
    }

    /// Highest cost with a kept program.
    pub fn max_kept_cost(&self) -> u32 {
        (0..self.pools.len())
            .rev()
            .find(|&c| self.levels.get(c).is_some_and(|l| l.kept > 0))
            .unwrap_or(0) as u32
    }

    fn level_mut(&mut self, cost: u32) -> &mut LevelStats {
        let c = cost as usize;
        if self.levels.len() <= c {
            self.levels.resize(c + 1, LevelStats::default());
        }
        &mut self.levels[c]
    }

    /// Ball check, then equivalence check, then insertion.
    pub fn try_insert(&mut self, cand: Candidate, pruning: &Pruning) -> InsertOutcome {
        let cost = cand.cost;
        self.level_mut(cost).enumerated += 1;
        if let Some(ball) = &pruning.ball {
            if cost as usize > pruning.size_threshold
                && ball.applies_to(&cand.outputs)
                && !ball.contains(&cand.outputs)
            {
                self.level_mut(cost).pruned_ball += 1;
                return InsertOutcome::PrunedBall;
            }
        }
        let id = self.entries.len();
        if let Some(m) = &pruning.equivalence {
            let key = m.key(&cand.outputs);
            if self.equiv.contains_key(&key) {
                self.level_mut(cost).pruned_equiv += 1;
                return InsertOutcome::PrunedEquiv;
            }
            self.equiv.insert(key, id);
        }
        self.level_mut(cost).kept += 1;
        self.by_output.entry(cand.outputs.clone()).or_insert(id);
        let c = cost as usize;
        if self.pools.len() <= c {
            self.pools.resize(c + 1, Vec::new());
        }
        if self.pools[c].is_empty() {
            self.pools[c] = vec![Vec::new(); self.n_nts];
        }
        for nt in 0..self.n_nts {
            if cand.nts & (1 << nt) != 0 {
                self.pools[c][nt].push(id);
            }
        }
        self.entries.push(Entry {
            program: cand.program,
            outputs: cand.outputs,
            cost,
            nts: cand.nts,
        });
        InsertOutcome::Kept(id)
    }
}

/// Walks child tuples of one production in enumeration order.
#[derive(Debug)]
struct TupleCursor {
    args: Vec<NtId>,
    target: u32,
    reach: Vec<Vec<bool>>,
    costs: Vec<u32>,
    idx: Vec<usize>,
    started: bool,
    done: bool,
}

impl TupleCursor {
    fn new(args: Vec<NtId>, target: u32, bank: &ProgramBank) -> TupleCursor {
        let k = args.len();
        let t = target as usize;
        let mut reach = vec![vec![false; t + 1]; k + 1];
        reach[k][0] = true;
        for pos in (0..k).rev() {
            for r in 1..=t {
                reach[pos][r] = (1..=r)
                    .any(|c| reach[pos + 1][r - c] && !bank.pool(args[pos], c as u32).is_empty());
            }
        }
        let done = !reach[0][t];
        TupleCursor { costs: vec![0; k], idx: vec![0; k], args, target, reach, started: false, done }
    }

    fn first_cost(&self, pos: usize, rem: u32, above: u32, bank: &ProgramBank) -> Option<u32> {
        (above + 1..=rem).find(|&c| {
            self.reach[pos + 1][(rem - c) as usize] && !bank.pool(self.args[pos], c).is_empty()
        })
    }

    fn fill_from(&mut self, pos: usize, mut rem: u32, bank: &ProgramBank) {
        for p in pos..self.args.len() {
            let c = self.first_cost(p, rem, 0, bank).expect("reachability table");
            self.costs[p] = c;
            self.idx[p] = 0;
            rem -= c;
        }
    }

    /// Next tuple of entry indices, or None when exhausted.
    fn next(&mut self, bank: &ProgramBank) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.fill_from(0, self.target, bank);
        } else if !self.advance(bank) {
            self.done = true;
            return None;
        }
        Some(
            (0..self.args.len())
                .map(|p| bank.pool(self.args[p], self.costs[p])[self.idx[p]])
                .collect(),
        )
    }

    fn advance(&mut self, bank: &ProgramBank) -> bool {
        for pos in (0..self.args.len()).rev() {
            let rem = self.target - self.costs[..pos].iter().sum::<u32>();
            if self.idx[pos] + 1 < bank.pool(self.args[pos], self.costs[pos]).len() {
                self.idx[pos] += 1;
                self.fill_from(pos + 1, rem - self.costs[pos], bank);
                return true;
            }
            if let Some(c) = self.first_cost(pos, rem, self.costs[pos], bank) {
                self.costs[pos] = c;
                self.idx[pos] = 0;
                self.fill_from(pos + 1, rem - c, bank);
                return true;
            }
        }
        false
    }
}

#[derive(Debug)]
enum Phase {
    Learned(usize),
    Leaves(usize),
    Apps {
        group: usize,
        prod: usize,
        cursor: Option<TupleCursor>,
        seen: Option<HashSet<Program>>,
    },
    LevelDone,
}

/// One step of enumeration.
#[derive(Debug)]
pub enum Step {
    Candidate(Candidate),
    /// All programs of this cost have been produced.
    LevelEnd(u32),
    /// No program of higher cost can be built from the bank.
    Exhausted,
}

/// Produces programs in enumeration order from the children kept in a bank.
pub struct Enumerator<'a> {
    grammar: &'a FlatGrammar,
    examples: &'a ExampleSet,
    model: CostModel,
    cost: u32,
    phase: Phase,
    exhausted: bool,
}

impl<'a> Enumerator<'a> {
    pub fn new(grammar: &'a FlatGrammar, examples: &'a ExampleSet, model: CostModel) -> Enumerator<'a> {
        Enumerator { grammar, examples, model, cost: 1, phase: Phase::Learned(0), exhausted: false }
    }

    pub fn cost_model(&self) -> &CostModel {
        &self.model
    }

    pub fn level(&self) -> u32 {
        self.cost
    }

    pub fn next_step(&mut self, bank: &ProgramBank) -> Step {
        if self.exhausted {
            return Step::Exhausted;
        }
        loop {
            match &mut self.phase {
                Phase::Learned(i) => {
                    let i = *i;
                    if self.cost != 1 || i >= self.model.learned().len() {
                        self.phase = if self.cost == 1 {
                            Phase::Leaves(0)
                        } else {
                            Phase::Apps { group: 0, prod: 0, cursor: None, seen: None }
                        };
                        continue;
                    }
                    self.phase = Phase::Learned(i + 1);
                    let p = self.model.learned()[i].clone();
                    let nts = self.grammar.nts_of(&p);
                    if nts == 0 {
                        continue;
                    }
                    let Ok(outputs) = output_vector(&p, self.examples) else { continue };
                    return Step::Candidate(Candidate { program: p, outputs, cost: 1, nts });
                }
                Phase::Leaves(i) => {
                    let i = *i;
                    if i >= self.grammar.leaves.len() {
                        self.phase = Phase::LevelDone;
                        continue;
                    }
                    self.phase = Phase::Leaves(i + 1);
                    let (op, nts) = &self.grammar.leaves[i];
                    let p = Program::leaf(op.clone()).expect("validated grammar");
                    let outputs = match op {
                        Op::Var { index, .. } => self.examples.var_column(*index as usize),
                        Op::Const(v) => vec![v.clone(); self.examples.len()],
                        Op::Builtin(_) => unreachable!("leaf builtin"),
                    };
                    return Step::Candidate(Candidate { program: p, outputs, cost: 1, nts: *nts });
                }
                Phase::Apps { group, prod, cursor, seen } => {
                    let Some(apps) = self.grammar.apps.get(*group) else {
                        self.phase = Phase::LevelDone;
                        continue;
                    };
                    let Some(app) = apps.get(*prod) else {
                        *group += 1;
                        *prod = 0;
                        *cursor = None;
                        *seen = None;
                        continue;
                    };
                    if cursor.is_none() {
                        *cursor = Some(TupleCursor::new(app.args.clone(), self.cost - 1, bank));
                        if apps.len() > 1 && seen.is_none() {
                            *seen = Some(HashSet::new());
                        }
                    }
                    let Some(tuple) = cursor.as_mut().unwrap().next(bank) else {
                        *prod += 1;
                        *cursor = None;
                        continue;
                    };
                    let children: Vec<Program> =
                        tuple.iter().map(|&e| bank.entry(e).program.clone()).collect();
                    let p = Program::apply(app.op.clone(), children).expect("validated grammar");
                    if let Some(seen) = seen {
                        if !seen.insert(p.clone()) {
                            continue;
                        }
                    }
                    let child_nts: Vec<NtSet> = tuple.iter().map(|&e| bank.entry(e).nts).collect();
                    let nts = self.grammar.app_nts(&app.op, &child_nts);
                    let Op::Builtin(b) = app.op else { unreachable!("application of a leaf") };
                    let outputs: Option<OutputVector> = (0..self.examples.len())
                        .map(|k| {
                            let args: Vec<&Value> =
                                tuple.iter().map(|&e| &bank.entry(e).outputs[k]).collect();
                            apply_builtin(b, &args).ok()
                        })
                        .collect();
                    let Some(outputs) = outputs else { continue };
                    return Step::Candidate(Candidate { program: p, outputs, cost: self.cost, nts });
                }
                Phase::LevelDone => {
                    let done = self.cost;
                    let m = bank.max_kept_cost();
                    if self.grammar.apps.is_empty()
                        || done as u64 > self.grammar.max_arity() as u64 * m as u64
                    {
                        self.exhausted = true;
                    }
                    self.cost += 1;
                    self.phase = Phase::Learned(0);
                    return Step::LevelEnd(done);
                }
            }
        }
    }

    /// Produce the next candidate, skipping level boundaries.
    pub fn next_program(&mut self, bank: &ProgramBank) -> Option<Candidate> {
        loop {
            match self.next_step(bank) {
                Step::Candidate(c) => return Some(c),
                Step::LevelEnd(_) => continue,
                Step::Exhausted => return None,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Builtin, Production, Sort};

    fn overview_grammar() -> Grammar {
        let s = 0;
        let init = 1;
        let leaf = |v: Value| Sketch::Node(Op::Const(v), vec![]);
        let mut prods = vec![
            Production { lhs: s, rhs: Sketch::Hole(init) },
            Production {
                lhs: s,
                rhs: Sketch::Node(Op::Builtin(Builtin::StrReplace), vec![Sketch::Hole(s); 3]),
            },
            Production {
                lhs: s,
                rhs: Sketch::Node(Op::Builtin(Builtin::StrConcat), vec![Sketch::Hole(s); 2]),
            },
            Production { lhs: init, rhs: Sketch::Node(Op::var(0, "x", Sort::String), vec![]) },
        ];
        for c in ["", " Conference", " City"] {
            prods.push(Production { lhs: init, rhs: leaf(Value::str(c)) });
        }
        Grammar {
            nonterminals: vec![
                Nonterminal { name: "S".into(), sort: Sort::String },
                Nonterminal { name: "Init".into(), sort: Sort::String },
            ],
            productions: prods,
            start: s,
        }
    }

    fn examples() -> ExampleSet {
        ExampleSet::new(
            vec![("x".into(), Sort::String)],
            Sort::String,
            vec![vec![Value::str("a b")], vec![Value::str("c")]],
            vec![Value::str("a"), Value::str("c")],
        )
        .unwrap()
    }

    #[test]
    fn first_programs_follow_rank() {
        let g = FlatGrammar::new(&overview_grammar()).unwrap();
        let ex = examples();
        let mut e = Enumerator::new(&g, &ex, CostModel::new());
        let mut bank = ProgramBank::new(g.nonterminals.len());
        let none = Pruning { ball: None, size_threshold: 0, equivalence: None };
        let mut order = Vec::new();
        while let Some(c) = e.next_program(&bank) {
            order.push(c.program.to_string());
            bank.try_insert(c, &none);
            if order.len() == 5 {
                break;
            }
        }
        assert_eq!(order[0], "x");
        assert_eq!(order[3], "\" City\"");
        assert_eq!(order[4], "(str.++ x x)");
    }

    #[test]
    fn enumeration_order_matches_comparator() {
        let g = FlatGrammar::new(&overview_grammar()).unwrap();
        let ex = examples();
        let model = CostModel::new();
        let mut e = Enumerator::new(&g, &ex, model.clone());
        let mut bank = ProgramBank::new(g.nonterminals.len());
        let oe = Pruning {
            ball: None,
            size_threshold: 0,
            equivalence: Some(
                LiftedOrimetric::new(
                    std::sync::Arc::new(crate::metric::string::Lvst),
                    &[0, 1],
                    crate::metric::Aggregation::Sum,
                )
                .unwrap(),
            ),
        };
        let mut seen: Vec<Program> = Vec::new();
        while let Some(c) = e.next_program(&bank) {
            if c.cost > 5 {
                break;
            }
            seen.push(c.program.clone());
            bank.try_insert(c, &oe);
        }
        for w in seen.windows(2) {
            assert_eq!(model.compare(&g, &w[0], &w[1]), Ordering::Less, "{} {}", w[0], w[1]);
        }
    }

    #[test]
    fn nested_rules_are_flattened() {
        let bv = Sort::BitVec(8);
        let g = Grammar {
            nonterminals: vec![Nonterminal { name: "S".into(), sort: bv }],
            productions: vec![
                Production { lhs: 0, rhs: Sketch::Node(Op::var(0, "x", bv), vec![]) },
                Production {
                    lhs: 0,
                    rhs: Sketch::Node(
                        Op::Builtin(Builtin::BvNot),
                        vec![Sketch::Node(Op::Builtin(Builtin::BvAdd), vec![Sketch::Hole(0), Sketch::Hole(0)])],
                    ),
                },
            ],
            start: 0,
        };
        let fg = FlatGrammar::new(&g).unwrap();
        assert_eq!(fg.nonterminals.len(), 2);
        let x = Program::leaf(Op::var(0, "x", bv)).unwrap();
        let add = Program::apply(Op::Builtin(Builtin::BvAdd), vec![x.clone(), x.clone()]).unwrap();
        let p = Program::apply(Op::Builtin(Builtin::BvNot), vec![add.clone()]).unwrap();
        assert!(fg.derives(&p));
        assert!(!fg.derives(&add));
    }
}
