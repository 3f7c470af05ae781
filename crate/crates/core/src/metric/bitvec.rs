//! Bitvector orimetrics, generalised from 64 bits to any width `w`.

use super::{units, DataOrimetric, Dist};
use crate::semantics::{Bv, Value};

fn bv(v: &Value) -> Bv {
    v.as_bv().expect("bitvector metric applied to a non-bitvector value")
}

fn same_width(i: &Value, o: &Value) -> (Bv, Bv) {
    let (i, o) = (bv(i), bv(o));
    assert_eq!(i.width(), o.width(), "bitvector width mismatch");
    (i, o)
}

/// `o ⊑ i`: every bit set in `o` is set in `i`.
pub fn bitwise_le(o: Bv, i: Bv) -> bool {
    o.bits() & i.bits() == o.bits()
}

/// Hamming distance.
pub fn hamming(a: Bv, b: Bv) -> u32 {
    (a.bits() ^ b.bits()).count_ones()
}

/// `m_and(i, o)`: bits that `and` must still clear, if `o ⊑ i`.
#[derive(Clone, Copy, Debug)]
pub struct And {
    pub c: u64,
}

impl DataOrimetric for And {
    fn name(&self) -> String {
        "and".into()
    }

    fn distance(&self, i: &Value, o: &Value) -> Dist {
        let (i, o) = same_width(i, o);
        if bitwise_le(o, i) {
            units((!o.bits() & i.bits()).count_ones() as u64)
        } else {
            units(self.c)
        }
    }

    fn big_constant(&self) -> Dist {
        units(self.c)
    }

    fn max_distance(&self, o: &Value) -> Dist {
        let o = bv(o);
        units((o.width() - o.popcount()) as u64)
    }
}

/// `m_or(i, o)`: bits that `or` must still set, if `i ⊑ o`.
#[derive(Clone, Copy, Debug)]
pub struct Or {
    pub c: u64,
}

impl DataOrimetric for Or {
    fn name(&self) -> String {
        "or".into()
    }

    fn distance(&self, i: &Value, o: &Value) -> Dist {
        let (i, o) = same_width(i, o);
        if bitwise_le(i, o) {
            units((o.bits() & !i.bits()).count_ones() as u64)
        } else {
            units(self.c)
        }
    }

    fn big_constant(&self) -> Dist {
        units(self.c)
    }

    fn max_distance(&self, o: &Value) -> Dist {
        units(bv(o).popcount() as u64)
    }
}

/// `m_mul(i, o)`: `1 + lz(o) - lz(i)` when `i` has no more leading zeros than `o`.
#[derive(Clone, Copy, Debug)]
pub struct Mul {
    pub c: u64,
}

impl DataOrimetric for Mul {
    fn name(&self) -> String {
        "mul".into()
    }

    fn distance(&self, i: &Value, o: &Value) -> Dist {
        let (i, o) = same_width(i, o);
        if i == o {
            0
        } else if i.lz() <= o.lz() {
            units((1 + o.lz() - i.lz()) as u64)
        } else {
            units(self.c)
        }
    }

    fn big_constant(&self) -> Dist {
        units(self.c)
    }

    fn max_distance(&self, o: &Value) -> Dist {
        units(1 + bv(o).lz() as u64)
    }
}

/// Hamming distance folded so that the complement is one step away.
#[derive(Clone, Copy, Debug)]
pub struct Hd;

impl DataOrimetric for Hd {
    fn name(&self) -> String {
        "hd".into()
    }

    fn distance(&self, a: &Value, b: &Value) -> Dist {
        let (a, b) = same_width(a, b);
        let w = a.width();
        let h = hamming(a, b);
        if h <= w / 2 {
            units(h as u64)
        } else {
            units((w - h + 1) as u64)
        }
    }

    /// The fold peaks at `w - floor(w/2)`.
    fn max_distance(&self, o: &Value) -> Dist {
        let w = bv(o).width();
        units((w - w / 2) as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(w: u32, x: u64) -> Value {
        Value::bv(w, x)
    }

    #[test]
    fn and_values() {
        let m = And { c: 99 };
        assert_eq!(m.distance(&b(4, 0b1101), &b(4, 0b0101)), units(1));
        assert_eq!(m.distance(&b(64, u64::MAX), &b(64, u64::MAX)), 0);
        assert_eq!(m.distance(&b(4, 0b0100), &b(4, 0b0101)), units(99));
        assert_eq!(m.max_distance(&b(4, 0b0101)), units(2));
    }

    #[test]
    fn or_values() {
        let m = Or { c: 99 };
        assert_eq!(m.distance(&b(4, 0b0001), &b(4, 0b0101)), units(1));
        assert_eq!(m.distance(&b(4, 0b1000), &b(4, 0b0101)), units(99));
        assert_eq!(m.distance(&b(4, 3), &b(4, 3)), 0);
    }

    #[test]
    fn mul_values() {
        let m = Mul { c: 99 };
        assert_eq!(m.distance(&b(8, 0b1100), &b(8, 0b11)), units(3));
        assert_eq!(m.distance(&b(8, 0b11), &b(8, 0b1100)), units(99));
        assert_eq!(m.distance(&b(8, 7), &b(8, 7)), 0);
    }

    #[test]
    fn hd_values() {
        assert_eq!(Hd.distance(&b(64, 0), &b(64, u64::MAX)), units(1));
        assert_eq!(Hd.distance(&b(64, 0), &b(64, (1 << 40) - 1)), units(25));
        assert_eq!(Hd.distance(&b(64, 0), &b(64, (1 << 32) - 1)), units(32));
        assert_eq!(Hd.max_distance(&b(64, 0)), units(32));
        assert_eq!(Hd.max_distance(&b(5, 0)), units(3));
    }
}
