//! Set-level view of search spaces: enumeration along an explicit order,
//! largest bottom-up enumerable subsets, factorization and balls. The
//! enumerator in [`crate::enumerate`] realizes these incrementally; the
//! functions here work on small explicit sets and serve as oracles.

use crate::metric::Dist;

/// Walk `order` and keep a program once all its proper subprograms are kept.
pub fn enumerate_in_order<T: PartialEq + Clone>(order: &[T], subprograms: impl Fn(&T) -> Vec<T>) -> Vec<T> {
    let mut kept: Vec<T> = Vec::new();
    for p in order {
        if subprograms(p).iter().all(|q| kept.contains(q)) {
            kept.push(p.clone());
        }
    }
    kept
}

/// The largest subset closed under subprograms.
pub fn bottom_up_closure<T: PartialEq + Clone>(set: &[T], subprograms: impl Fn(&T) -> Vec<T>) -> Vec<T> {
    let mut cur: Vec<T> = set.to_vec();
    loop {
        let next: Vec<T> =
            cur.iter().filter(|p| subprograms(p).iter().all(|q| cur.contains(q))).cloned().collect();
        if next.len() == cur.len() {
            return cur;
        }
        cur = next;
    }
}

/// Keep each program unless an earlier one in `order` is at distance zero from it.
pub fn factorize<T: Clone>(order: &[T], m: impl Fn(&T, &T) -> Dist) -> Vec<T> {
    order
        .iter()
        .enumerate()
        .filter(|(i, p)| order[..*i].iter().all(|q| m(p, q) != 0))
        .map(|(_, p)| p.clone())
        .collect()
}

/// Members of `set` within `r` of `center`, strictly or not.
pub fn ball<T: Clone>(set: &[T], m: impl Fn(&T, &T) -> Dist, center: &T, r: Dist, strict: bool) -> Vec<T> {
    set.iter()
        .filter(|a| {
            let d = m(a, center);
            if strict {
                d < r
            } else {
                d <= r
            }
        })
        .cloned()
        .collect()
}
