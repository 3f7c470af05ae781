//! String orimetrics.

use std::sync::Arc;

use super::levenshtein::{levenshtein, LevenshteinAutomaton, MAX_RADIUS};
use super::{units, DataOrimetric, Dist, MemberFn, SCALE};
use crate::semantics::Value;

fn s(v: &Value) -> &str {
    v.as_str().expect("string metric applied to a non-string value")
}

fn len_gap(a: &str, b: &str) -> u64 {
    (a.len() as i64 - b.len() as i64).unsigned_abs()
}

/// Superstring-rewarding metric with constant 100 used in the worked example.
#[derive(Clone, Copy, Debug)]
pub struct Overview;

pub const OVERVIEW_CONSTANT: u64 = 100;

impl DataOrimetric for Overview {
    fn name(&self) -> String {
        "overview".into()
    }

    fn distance(&self, i: &Value, o: &Value) -> Dist {
        let (i, o) = (s(i), s(o));
        if i.contains(o) {
            units((i.len() - o.len()) as u64)
        } else {
            units(OVERVIEW_CONSTANT + len_gap(i, o))
        }
    }

    fn big_constant(&self) -> Dist {
        units(OVERVIEW_CONSTANT)
    }

    fn max_distance(&self, _o: &Value) -> Dist {
        units(OVERVIEW_CONSTANT)
    }
}

/// `m_concat(i, o)`: `|o| - |i|` when `i` is an infix of `o`, else `c + ||o| - |i||`.
#[derive(Clone, Copy, Debug)]
pub struct Concat {
    pub c: u64,
}

impl DataOrimetric for Concat {
    fn name(&self) -> String {
        "concat".into()
    }

    fn distance(&self, i: &Value, o: &Value) -> Dist {
        let (i, o) = (s(i), s(o));
        if o.contains(i) {
            units((o.len() - i.len()) as u64)
        } else {
            units(self.c + len_gap(i, o))
        }
    }

    fn big_constant(&self) -> Dist {
        units(self.c)
    }

    fn max_distance(&self, o: &Value) -> Dist {
        units(s(o).len() as u64)
    }
}

/// `m_substr(i, o)`: `|i| - |o|` when `o` is an infix of `i`, else `c + ||o| - |i||`.
#[derive(Clone, Copy, Debug)]
pub struct Substr {
    pub c: u64,
}

impl DataOrimetric for Substr {
    fn name(&self) -> String {
        "substr".into()
    }

    fn distance(&self, i: &Value, o: &Value) -> Dist {
        let (i, o) = (s(i), s(o));
        if i.contains(o) {
            units((i.len() - o.len()) as u64)
        } else {
            units(self.c + len_gap(i, o))
        }
    }

    fn big_constant(&self) -> Dist {
        units(self.c)
    }

    /// The superstring branch is unbounded, so the only meaningful cut is
    /// just below the constant.
    fn max_distance(&self, _o: &Value) -> Dist {
        units(self.c) - 1
    }
}

/// Edit distance.
#[derive(Clone, Copy, Debug)]
pub struct Lvst;

impl DataOrimetric for Lvst {
    fn name(&self) -> String {
        "lvst".into()
    }

    fn distance(&self, i: &Value, o: &Value) -> Dist {
        units(levenshtein(s(i).as_bytes(), s(o).as_bytes()) as u64)
    }

    fn max_distance(&self, _o: &Value) -> Dist {
        units(MAX_RADIUS as u64)
    }

    fn member_fn(&self, center: &Value, radius: Dist, strict: bool) -> Option<MemberFn> {
        // Integer bound k with: d < k  <=>  d < radius (open) or d <= radius (closed).
        let k = if strict {
            radius.div_ceil(SCALE)
        } else {
            radius / SCALE + 1
        };
        if k == 0 {
            return Some(Arc::new(|_| false));
        }
        if k > MAX_RADIUS as u64 {
            return None;
        }
        let a = LevenshteinAutomaton::build(s(center).as_bytes(), k as u32).ok()?;
        Some(Arc::new(move |v: &Value| a.accepts(s(v).as_bytes())))
    }
}

/// `Σ|o|` over the outputs; the constant branch starts above it.
pub fn total_length(outputs: &[Value]) -> u64 {
    outputs.iter().map(|o| s(o).len() as u64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &str) -> Value {
        Value::str(x)
    }

    #[test]
    fn overview_values() {
        assert_eq!(Overview.distance(&v("PO"), &v("POPL")), units(102));
        assert_eq!(Overview.distance(&v("POPL"), &v("PO")), units(2));
        assert_eq!(Overview.distance(&v("POPL Conference"), &v("POPL")), units(11));
    }

    #[test]
    fn concat_values() {
        let m = Concat { c: 50 };
        assert_eq!(m.distance(&v("PO"), &v("POPL")), units(2));
        assert_eq!(m.distance(&v("POPL"), &v("POPL")), 0);
        assert_eq!(m.distance(&v("POP"), &v("POPL")), units(1));
        assert_eq!(m.distance(&v("AB"), &v("POPL")), units(52));
        assert_eq!(m.distance(&v(""), &v("POPL")), units(4));
    }

    #[test]
    fn substr_values() {
        let m = Substr { c: 50 };
        assert_eq!(m.distance(&v("POPL Conference"), &v("POPL")), units(11));
        assert_eq!(m.distance(&v("PO"), &v("POPL")), units(52));
    }

    #[test]
    fn lvst_member_matches_distance() {
        for (r, strict) in [(units(2), true), (units(2), false), (units(3) / 2, true)] {
            let f = Lvst.member_fn(&v("POPL"), r, strict).unwrap();
            for w in ["POPL", "POP", "PO", "P", "XOPX", ""] {
                let d = Lvst.distance(&v(w), &v("POPL"));
                let want = if strict { d < r } else { d <= r };
                assert_eq!(f(&v(w)), want, "{w} r={r} strict={strict}");
            }
        }
    }
}
