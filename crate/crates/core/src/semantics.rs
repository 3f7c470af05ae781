//! Values, example sets and SMT-LIB evaluation for strings and bitvectors.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ast::{Builtin, Op, Program, Sort};

/// A fixed-width bitvector. Bits above `width` are always zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bv {
    width: u32,
    bits: u64,
}

pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

#[allow(clippy::should_implement_trait)]
impl Bv {
    pub fn new(width: u32, bits: u64) -> Bv {
        assert!((1..=64).contains(&width), "bitvector width {width} out of range");
        Bv { width, bits: bits & mask(width) }
    }

    pub fn width(self) -> u32 {
        self.width
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn msb(self) -> bool {
        self.bits >> (self.width - 1) & 1 == 1
    }

    /// Leading zeros within the width; `w` for zero.
    pub fn lz(self) -> u32 {
        self.bits.leading_zeros() - (64 - self.width)
    }

    pub fn popcount(self) -> u32 {
        self.bits.count_ones()
    }

    pub fn not(self) -> Bv {
        Bv::new(self.width, !self.bits)
    }

    pub fn neg(self) -> Bv {
        Bv::new(self.width, self.bits.wrapping_neg())
    }

    pub fn add(self, o: Bv) -> Bv {
        Bv::new(self.width, self.bits.wrapping_add(o.bits))
    }

    pub fn sub(self, o: Bv) -> Bv {
        Bv::new(self.width, self.bits.wrapping_sub(o.bits))
    }

    pub fn mul(self, o: Bv) -> Bv {
        Bv::new(self.width, self.bits.wrapping_mul(o.bits))
    }

    pub fn udiv(self, o: Bv) -> Bv {
        // division by zero gives all ones
        Bv::new(self.width, self.bits.checked_div(o.bits).unwrap_or(u64::MAX))
    }

    pub fn urem(self, o: Bv) -> Bv {
        if o.bits == 0 {
            self
        } else {
            Bv::new(self.width, self.bits % o.bits)
        }
    }

    pub fn sdiv(self, o: Bv) -> Bv {
        match (self.msb(), o.msb()) {
            (false, false) => self.udiv(o),
            (true, false) => self.neg().udiv(o).neg(),
            (false, true) => self.udiv(o.neg()).neg(),
            (true, true) => self.neg().udiv(o.neg()),
        }
    }

    pub fn srem(self, o: Bv) -> Bv {
        match (self.msb(), o.msb()) {
            (false, false) => self.urem(o),
            (true, false) => self.neg().urem(o).neg(),
            (false, true) => self.urem(o.neg()),
            (true, true) => self.neg().urem(o.neg()).neg(),
        }
    }

    pub fn shl(self, o: Bv) -> Bv {
        if o.bits >= self.width as u64 {
            Bv::new(self.width, 0)
        } else {
            Bv::new(self.width, self.bits << o.bits)
        }
    }

    pub fn lshr(self, o: Bv) -> Bv {
        if o.bits >= self.width as u64 {
            Bv::new(self.width, 0)
        } else {
            Bv::new(self.width, self.bits >> o.bits)
        }
    }

    pub fn ashr(self, o: Bv) -> Bv {
        let fill = if self.msb() { u64::MAX } else { 0 };
        if o.bits >= self.width as u64 {
            return Bv::new(self.width, fill);
        }
        let sh = o.bits as u32;
        let logical = self.bits >> sh;
        let high = if sh == 0 { 0 } else { fill & !(mask(self.width) >> sh) };
        Bv::new(self.width, logical | high)
    }
}

/// A domain value.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Str(Arc<str>),
    Int(i64),
    Bool(bool),
    Bv(Bv),
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(s.into())
    }

    pub fn bv(width: u32, bits: u64) -> Value {
        Value::Bv(Bv::new(width, bits))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Value::Str(_) => Sort::String,
            Value::Int(_) => Sort::Int,
            Value::Bool(_) => Sort::Bool,
            Value::Bv(b) => Sort::BitVec(b.width()),
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_bv(&self) -> Option<Bv> {
        match self {
            Value::Bv(b) => Some(*b),
            _ => None,
        }
    }
}

/// SMT-LIB literal syntax.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    if c == '"' {
                        f.write_str("\"\"")?;
                    } else if (' '..='~').contains(&c) {
                        write!(f, "{c}")?;
                    } else {
                        write!(f, "\\u{{{:x}}}", c as u32)?;
                    }
                }
                f.write_str("\"")
            }
            Value::Int(i) if *i < 0 => write!(f, "(- {})", i.unsigned_abs()),
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Bv(b) if b.width() % 4 == 0 => {
                write!(f, "#x{:0w$x}", b.bits(), w = (b.width() / 4) as usize)
            }
            Value::Bv(b) => write!(f, "#b{:0w$b}", b.bits(), w = b.width() as usize),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("variable {0} is unbound")]
    UnboundVariable(String),
    #[error("sort mismatch in {0}")]
    SortMismatch(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExampleError {
    #[error("{inputs} inputs but {outputs} outputs")]
    LengthMismatch { inputs: usize, outputs: usize },
    #[error("example {0} has the wrong number of arguments")]
    Arity(usize),
    #[error("example {0} does not match the declared sorts")]
    Sort(usize),
    #[error("examples {0} and {1} have identical inputs")]
    Duplicate(usize, usize),
    #[error("no examples")]
    Empty,
}

/// Per-example outputs of one program, ordered by example index.
pub type OutputVector = Vec<Value>;

/// Input-output examples. The outputs are the ground truth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExampleSet {
    pub vars: Vec<(String, Sort)>,
    pub inputs: Vec<Vec<Value>>,
    pub outputs: Vec<Value>,
    pub output_sort: Sort,
}

impl ExampleSet {
    pub fn new(
        vars: Vec<(String, Sort)>,
        output_sort: Sort,
        inputs: Vec<Vec<Value>>,
        outputs: Vec<Value>,
    ) -> Result<ExampleSet, ExampleError> {
        if inputs.len() != outputs.len() {
            return Err(ExampleError::LengthMismatch {
                inputs: inputs.len(),
                outputs: outputs.len(),
            });
        }
        if inputs.is_empty() {
            return Err(ExampleError::Empty);
        }
        for (k, (inp, out)) in inputs.iter().zip(&outputs).enumerate() {
            if inp.len() != vars.len() {
                return Err(ExampleError::Arity(k));
            }
            if out.sort() != output_sort || inp.iter().zip(&vars).any(|(v, (_, s))| v.sort() != *s) {
                return Err(ExampleError::Sort(k));
            }
            if let Some(j) = inputs[..k].iter().position(|other| other == inp) {
                return Err(ExampleError::Duplicate(j, k));
            }
        }
        Ok(ExampleSet { vars, inputs, outputs, output_sort })
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// Output vector of the variable with the given index.
    pub fn var_column(&self, index: usize) -> OutputVector {
        self.inputs.iter().map(|i| i[index].clone()).collect()
    }
}

fn substr(s: &str, i: i64, n: i64) -> Value {
    let len = s.len() as i64;
    if i < 0 || i >= len || n <= 0 {
        return Value::str("");
    }
    let end = i.saturating_add(n).min(len);
    Value::str(&s[i as usize..end as usize])
}

/// Apply a built-in to evaluated arguments.
pub fn apply_builtin(b: Builtin, args: &[&Value]) -> Result<Value, EvalError> {
    use Value::*;
    let bad = || EvalError::SortMismatch(b.name().to_string());
    if args.len() != b.arity() {
        return Err(bad());
    }
    let v = match (b, args) {
        (Builtin::StrConcat, [Str(a), Str(c)]) => {
            let mut s = String::with_capacity(a.len() + c.len());
            s.push_str(a);
            s.push_str(c);
            Value::Str(s.into())
        }
        (Builtin::StrReplace, [Str(s), Str(t), Str(u)]) => {
            if t.is_empty() {
                Value::Str(format!("{u}{s}").into())
            } else if let Some(pos) = s.find(&**t) {
                Value::Str(format!("{}{}{}", &s[..pos], u, &s[pos + t.len()..]).into())
            } else {
                (*args[0]).clone()
            }
        }
        (Builtin::StrSubstr, [Str(s), Int(i), Int(n)]) => substr(s, *i, *n),
        (Builtin::StrAt, [Str(s), Int(i)]) => substr(s, *i, 1),
        (Builtin::StrLen, [Str(s)]) => Int(s.len() as i64),
        (Builtin::IntToStr, [Int(n)]) => {
            if *n < 0 {
                Value::str("")
            } else {
                Value::Str(n.to_string().into())
            }
        }
        (Builtin::BvNot, [Bv(a)]) => Bv(a.not()),
        (Builtin::BvNeg, [Bv(a)]) => Bv(a.neg()),
        (_, [Bv(a), Bv(c)]) if a.width() == c.width() => Bv(match b {
            Builtin::BvAnd => crate::semantics::Bv::new(a.width(), a.bits() & c.bits()),
            Builtin::BvOr => crate::semantics::Bv::new(a.width(), a.bits() | c.bits()),
            Builtin::BvXor => crate::semantics::Bv::new(a.width(), a.bits() ^ c.bits()),
            Builtin::BvAdd => a.add(*c),
            Builtin::BvSub => a.sub(*c),
            Builtin::BvMul => a.mul(*c),
            Builtin::BvUdiv => a.udiv(*c),
            Builtin::BvUrem => a.urem(*c),
            Builtin::BvSdiv => a.sdiv(*c),
            Builtin::BvSrem => a.srem(*c),
            Builtin::BvShl => a.shl(*c),
            Builtin::BvLshr => a.lshr(*c),
            Builtin::BvAshr => a.ashr(*c),
            _ => return Err(bad()),
        }),
        _ => return Err(bad()),
    };
    Ok(v)
}

/// Evaluate `p` under an assignment indexed by variable position.
pub fn eval(p: &Program, input: &[Value]) -> Result<Value, EvalError> {
    match p.op() {
        Op::Var { index, name, sort } => {
            let v = input
                .get(*index as usize)
                .ok_or_else(|| EvalError::UnboundVariable(name.to_string()))?;
            if v.sort() != *sort {
                return Err(EvalError::SortMismatch(name.to_string()));
            }
            Ok(v.clone())
        }
        Op::Const(v) => Ok(v.clone()),
        Op::Builtin(b) => {
            let args = p
                .children()
                .iter()
                .map(|c| eval(c, input))
                .collect::<Result<Vec<_>, _>>()?;
            let refs: Vec<&Value> = args.iter().collect();
            apply_builtin(*b, &refs)
        }
    }
}

pub fn output_vector(p: &Program, examples: &ExampleSet) -> Result<OutputVector, EvalError> {
    examples.inputs.iter().map(|i| eval(p, i)).collect()
}

pub fn satisfies(p: &Program, examples: &ExampleSet) -> bool {
    matches!(output_vector(p, examples), Ok(v) if v == examples.outputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv8(x: u64) -> Bv {
        Bv::new(8, x)
    }

    fn app(b: Builtin, args: &[Value]) -> Value {
        let refs: Vec<&Value> = args.iter().collect();
        apply_builtin(b, &refs).unwrap()
    }

    #[test]
    fn string_ops() {
        assert_eq!(app(Builtin::StrConcat, &[Value::str("PO"), Value::str("PL")]), Value::str("POPL"));
        let r = |s: &str, t: &str, u: &str| {
            app(Builtin::StrReplace, &[Value::str(s), Value::str(t), Value::str(u)])
        };
        assert_eq!(r("POPL Conference", "Conference", ""), Value::str("POPL "));
        assert_eq!(r("POPL Conference", "City", "Conference"), Value::str("POPL Conference"));
        assert_eq!(r("aXbXc", "X", "-"), Value::str("a-bXc"));
        assert_eq!(r("abc", "", "Z"), Value::str("Zabc"));
        let sub = |s: &str, i: i64, n: i64| {
            app(Builtin::StrSubstr, &[Value::str(s), Value::Int(i), Value::Int(n)])
        };
        assert_eq!(sub("hello", 1, 3), Value::str("ell"));
        assert_eq!(sub("hello", 3, 10), Value::str("lo"));
        assert_eq!(sub("hello", 5, 1), Value::str(""));
        assert_eq!(sub("hello", -1, 2), Value::str(""));
        assert_eq!(sub("hello", 1, 0), Value::str(""));
        assert_eq!(sub("hello", 2, i64::MAX), Value::str("llo"));
        assert_eq!(app(Builtin::StrAt, &[Value::str("abc"), Value::Int(2)]), Value::str("c"));
        assert_eq!(app(Builtin::StrLen, &[Value::str("abc")]), Value::Int(3));
        assert_eq!(app(Builtin::IntToStr, &[Value::Int(42)]), Value::str("42"));
        assert_eq!(app(Builtin::IntToStr, &[Value::Int(-3)]), Value::str(""));
    }

    #[test]
    fn bitvector_ops() {
        assert_eq!(bv8(0x0f).not(), bv8(0xf0));
        assert_eq!(bv8(1).neg(), bv8(0xff));
        assert_eq!(bv8(200).add(bv8(100)), bv8(44));
        assert_eq!(bv8(3).sub(bv8(5)), bv8(254));
        assert_eq!(bv8(16).mul(bv8(17)), bv8(16));
        assert_eq!(bv8(7).udiv(bv8(0)), bv8(0xff));
        assert_eq!(bv8(7).urem(bv8(0)), bv8(7));
        // -7 / 2 = -3, -7 rem 2 = -1
        assert_eq!(bv8(0xf9).sdiv(bv8(2)), bv8(0xfd));
        assert_eq!(bv8(0xf9).srem(bv8(2)), bv8(0xff));
        // 7 / -2 = -3, 7 rem -2 = 1
        assert_eq!(bv8(7).sdiv(bv8(0xfe)), bv8(0xfd));
        assert_eq!(bv8(7).srem(bv8(0xfe)), bv8(1));
        assert_eq!(bv8(0xf9).sdiv(bv8(0)), bv8(1));
        assert_eq!(bv8(5).sdiv(bv8(0)), bv8(0xff));
        assert_eq!(bv8(1).shl(bv8(7)), bv8(0x80));
        assert_eq!(bv8(1).shl(bv8(8)), bv8(0));
        assert_eq!(bv8(0x80).lshr(bv8(7)), bv8(1));
        assert_eq!(bv8(0x80).ashr(bv8(3)), bv8(0xf0));
        assert_eq!(bv8(0x80).ashr(bv8(9)), bv8(0xff));
        assert_eq!(bv8(0x40).ashr(bv8(9)), bv8(0));
        assert_eq!(Bv::new(64, 0).lz(), 64);
        assert_eq!(bv8(0b0000_1100).lz(), 4);
    }

    #[test]
    fn literal_display() {
        assert_eq!(Value::bv(8, 0xab).to_string(), "#xab");
        assert_eq!(Value::bv(3, 5).to_string(), "#b101");
        assert_eq!(Value::str("a\"b").to_string(), "\"a\"\"b\"");
        assert_eq!(Value::Int(-4).to_string(), "(- 4)");
    }

    #[test]
    fn example_validation() {
        let vars = vec![("x".to_string(), Sort::String)];
        let dup = ExampleSet::new(
            vars.clone(),
            Sort::String,
            vec![vec![Value::str("a")], vec![Value::str("a")]],
            vec![Value::str("b"), Value::str("c")],
        );
        assert_eq!(dup.unwrap_err(), ExampleError::Duplicate(0, 1));
        let sort = ExampleSet::new(vars, Sort::String, vec![vec![Value::Int(1)]], vec![Value::str("")]);
        assert!(sort.is_err());
    }
}
