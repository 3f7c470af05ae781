//! Random values for exercising metrics. Samples are related to each other
//! (substrings, concatenations, edits, masked bits) so that small distances
//! come up as often as large ones.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::semantics::Value;

fn random_string<R: Rng>(rng: &mut R, alphabet: &[u8], max_len: usize) -> String {
    let n = rng.gen_range(0..=max_len);
    (0..n).map(|_| *alphabet.choose(rng).unwrap() as char).collect()
}

fn derive_string<R: Rng>(rng: &mut R, pool: &[String], alphabet: &[u8], max_len: usize) -> String {
    let a = pool.choose(rng).unwrap();
    let b = pool.choose(rng).unwrap();
    let mut s = match rng.gen_range(0..5) {
        0 => random_string(rng, alphabet, max_len),
        1 if !a.is_empty() => {
            let i = rng.gen_range(0..a.len());
            let j = rng.gen_range(i..=a.len());
            a[i..j].to_string()
        }
        2 => format!("{a}{b}"),
        3 if !a.is_empty() => {
            let mut v = a.clone().into_bytes();
            let i = rng.gen_range(0..v.len());
            match rng.gen_range(0..3) {
                0 => v[i] = *alphabet.choose(rng).unwrap(),
                1 => {
                    v.remove(i);
                }
                _ => v.insert(i, *alphabet.choose(rng).unwrap()),
            }
            String::from_utf8(v).unwrap()
        }
        _ => a.clone(),
    };
    s.truncate(max_len);
    s
}

/// `n` related strings over `alphabet`, each at most `max_len` long.
pub fn strings<R: Rng>(rng: &mut R, n: usize, alphabet: &[u8], max_len: usize) -> Vec<Value> {
    let mut pool: Vec<String> = vec![String::new(), random_string(rng, alphabet, max_len)];
    while pool.len() < n {
        let s = derive_string(rng, &pool, alphabet, max_len);
        pool.push(s);
    }
    pool.truncate(n);
    pool.iter().map(|s| Value::str(s)).collect()
}

/// `n` related bitvectors of width `w`.
pub fn bitvectors<R: Rng>(rng: &mut R, n: usize, w: u32) -> Vec<Value> {
    let m = crate::semantics::mask(w);
    let mut pool: Vec<u64> = vec![0, m, rng.gen::<u64>() & m];
    while pool.len() < n {
        let a = *pool.choose(rng).unwrap();
        let b = *pool.choose(rng).unwrap();
        let v = match rng.gen_range(0..7) {
            0 => rng.gen::<u64>(),
            1 => a & b,
            2 => a | b,
            3 => a.wrapping_mul(b),
            4 => a ^ (1 << rng.gen_range(0..w)),
            5 => !a,
            _ => a >> rng.gen_range(0..w),
        };
        pool.push(v & m);
    }
    pool.truncate(n);
    pool.into_iter().map(|v| Value::bv(w, v)).collect()
}
