//! Completing one-hole-per-argument sketches from a freshly kept program by
//! inverting the operator on the target outputs.

use std::collections::HashMap;

use crate::ast::{Builtin, Op, Program, Sort};
use crate::enumerate::{FlatGrammar, NtSet, ProgramBank};
use crate::metric::bitvec::bitwise_le;
use crate::semantics::{apply_builtin, output_vector, Bv, ExampleSet, OutputVector, Value};

type BitOp = fn(u64, u64) -> u64;

/// Sketch shapes with an inverse-semantics rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SketchKind {
    And,
    Or,
    Add,
    Xor,
    Mul,
    NotAdd,
    NegAdd,
    NotXor,
    NegXor,
    StrConcat,
    StrReplace,
    StrSubstr,
}

impl SketchKind {
    pub const BITVEC: [SketchKind; 9] = [
        SketchKind::And,
        SketchKind::Or,
        SketchKind::Add,
        SketchKind::Xor,
        SketchKind::Mul,
        SketchKind::NotAdd,
        SketchKind::NegAdd,
        SketchKind::NotXor,
        SketchKind::NegXor,
    ];
    pub const STRING: [SketchKind; 3] =
        [SketchKind::StrConcat, SketchKind::StrReplace, SketchKind::StrSubstr];

    /// Operators the completed program uses, outermost first.
    pub fn operators(self) -> &'static [Builtin] {
        match self {
            SketchKind::And => &[Builtin::BvAnd],
            SketchKind::Or => &[Builtin::BvOr],
            SketchKind::Add => &[Builtin::BvAdd],
            SketchKind::Xor => &[Builtin::BvXor],
            SketchKind::Mul => &[Builtin::BvMul],
            SketchKind::NotAdd => &[Builtin::BvNot, Builtin::BvAdd],
            SketchKind::NegAdd => &[Builtin::BvNeg, Builtin::BvAdd],
            SketchKind::NotXor => &[Builtin::BvNot, Builtin::BvXor],
            SketchKind::NegXor => &[Builtin::BvNeg, Builtin::BvXor],
            SketchKind::StrConcat => &[Builtin::StrConcat],
            SketchKind::StrReplace => &[Builtin::StrReplace],
            SketchKind::StrSubstr => &[Builtin::StrSubstr],
        }
    }
}

/// All `x` with `a * x ≡ o (mod 2^w)`, ascending.
pub fn mul_solutions(a: Bv, o: Bv) -> Vec<Bv> {
    let w = a.width();
    if a.bits() == 0 {
        return if o.bits() == 0 {
            (0..=crate::semantics::mask(w)).map(|x| Bv::new(w, x)).collect()
        } else {
            Vec::new()
        };
    }
    let t = a.bits().trailing_zeros();
    if o.bits() & ((1u64 << t) - 1) != 0 {
        return Vec::new();
    }
    let m = w - t; // modulus 2^m
    let odd = a.bits() >> t;
    let rhs = o.bits() >> t;
    let inv = inverse_mod_pow2(odd, m);
    let mm = crate::semantics::mask(m);
    let x0 = rhs.wrapping_mul(inv) & mm;
    let step = if m == 64 { 0 } else { 1u64 << m };
    let mut out: Vec<Bv> = (0..(1u64 << t)).map(|k| Bv::new(w, x0.wrapping_add(k.wrapping_mul(step)))).collect();
    out.sort();
    out
}

/// Inverse of an odd number modulo `2^m` by the extended Euclidean algorithm.
fn inverse_mod_pow2(a: u64, m: u32) -> u64 {
    if m == 0 {
        return 0;
    }
    let modulus: i128 = 1i128 << m;
    let (mut r0, mut r1) = (modulus, (a as i128) % modulus);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    debug_assert_eq!(r0, 1, "even number has no inverse");
    (s0.rem_euclid(modulus)) as u64
}

/// Side tables over the kept programs, updated as programs are kept.
#[derive(Debug)]
pub struct Deducer {
    kinds: Vec<SketchKind>,
    target: OutputVector,
    /// Bitvector programs bitwise above / below the target on every example.
    and_supers: Vec<usize>,
    or_subs: Vec<usize>,
    bitvecs: Vec<usize>,
    strings: Vec<usize>,
    ints: Vec<usize>,
    /// Programs indexed by their output on example 0.
    first: HashMap<Value, Vec<usize>>,
    /// Superstring programs indexed by the start of the target in their outputs.
    supers: HashMap<Vec<i64>, Vec<usize>>,
    /// (superstring program, index program) pairs.
    pairs: Vec<(usize, usize)>,
    pub hits: u64,
}

struct Ctx<'a> {
    bank: &'a ProgramBank,
    grammar: &'a FlatGrammar,
    examples: &'a ExampleSet,
    target: &'a [Value],
}

impl Ctx<'_> {
    fn nts(&self, e: usize) -> NtSet {
        self.bank.entry(e).nts
    }

    fn out(&self, e: usize) -> &[Value] {
        &self.bank.entry(e).outputs
    }

    fn prog(&self, e: usize) -> Program {
        self.bank.entry(e).program.clone()
    }

    /// Build `op(args)` if derivable from the start symbol and correct on every example.
    fn complete(&self, b: Builtin, args: &[usize]) -> Option<Program> {
        let nts: Vec<NtSet> = args.iter().map(|&e| self.nts(e)).collect();
        let set = self.grammar.app_nts(&Op::Builtin(b), &nts);
        if set & (1 << self.grammar.start) == 0 {
            return None;
        }
        self.checked(Program::apply(Op::Builtin(b), args.iter().map(|&e| self.prog(e)).collect()).ok()?)
    }

    /// Like `complete` but for binary commutative operators tries both orders.
    fn complete_comm(&self, b: Builtin, p: usize, q: usize) -> Option<Program> {
        self.complete(b, &[p, q]).or_else(|| self.complete(b, &[q, p]))
    }

    /// `outer(inner(p, q))`, either argument order.
    fn complete_nested(&self, outer: Builtin, inner: Builtin, p: usize, q: usize) -> Option<Program> {
        let iop = Op::Builtin(inner);
        let oop = Op::Builtin(outer);
        for (a, c) in [(p, q), (q, p)] {
            let inner_nts = self.grammar.app_nts(&iop, &[self.nts(a), self.nts(c)]);
            if inner_nts == 0 {
                continue;
            }
            let set = self.grammar.app_nts(&oop, &[inner_nts]);
            if set & (1 << self.grammar.start) == 0 {
                continue;
            }
            let ip = Program::apply(iop.clone(), vec![self.prog(a), self.prog(c)]).ok()?;
            if let Some(prog) = self.checked(Program::apply(oop.clone(), vec![ip]).ok()?) {
                return Some(prog);
            }
        }
        None
    }

    fn checked(&self, p: Program) -> Option<Program> {
        let outs = output_vector(&p, self.examples).ok()?;
        (outs == self.target).then_some(p)
    }
}

fn bvs(v: &[Value]) -> Vec<Bv> {
    v.iter().map(|x| x.as_bv().expect("bitvector")).collect()
}

fn strs(v: &[Value]) -> Vec<&str> {
    v.iter().map(|x| x.as_str().expect("string")).collect()
}

impl Deducer {
    pub fn new(kinds: &[SketchKind], grammar: &FlatGrammar, target: &[Value]) -> Deducer {
        let present = |b: &Builtin| grammar.apps.iter().any(|g| g[0].op == Op::Builtin(*b));
        let out_sort = target.first().map(Value::sort);
        let kinds = kinds
            .iter()
            .copied()
            .filter(|k| k.operators().iter().all(present))
            .filter(|k| match out_sort {
                Some(Sort::String) => SketchKind::STRING.contains(k),
                Some(Sort::BitVec(_)) => SketchKind::BITVEC.contains(k),
                _ => false,
            })
            .collect();
        Deducer {
            kinds,
            target: target.to_vec(),
            and_supers: Vec::new(),
            or_subs: Vec::new(),
            bitvecs: Vec::new(),
            strings: Vec::new(),
            ints: Vec::new(),
            first: HashMap::new(),
            supers: HashMap::new(),
            pairs: Vec::new(),
            hits: 0,
        }
    }

    pub fn kinds(&self) -> &[SketchKind] {
        &self.kinds
    }

    /// Record a bank entry as a partner for later deductions. `deduce` does this itself.
    pub fn observe(&mut self, bank: &ProgramBank, id: usize) {
        let out = &bank.entry(id).outputs;
        self.first.entry(out[0].clone()).or_default().push(id);
        match &out[0] {
            Value::Bv(_) => {
                self.bitvecs.push(id);
                let o = bvs(out);
                let t = bvs(&self.target);
                if o.iter().zip(&t).all(|(o, t)| bitwise_le(*t, *o)) {
                    self.and_supers.push(id);
                }
                if o.iter().zip(&t).all(|(o, t)| bitwise_le(*o, *t)) {
                    self.or_subs.push(id);
                }
            }
            Value::Str(_) => self.strings.push(id),
            Value::Int(_) => self.ints.push(id),
            Value::Bool(_) => {}
        }
    }

    /// Record `id` in the side tables and return up to `limit` completions
    /// that use it and satisfy every example.
    pub fn deduce(
        &mut self,
        bank: &ProgramBank,
        grammar: &FlatGrammar,
        examples: &ExampleSet,
        id: usize,
        limit: usize,
    ) -> Vec<Program> {
        self.observe(bank, id);
        let target = self.target.clone();
        let ctx = Ctx { bank, grammar, examples, target: &target };
        let mut out = Vec::new();
        for k in self.kinds.clone() {
            if out.len() >= limit {
                break;
            }
            let room = limit - out.len();
            match k {
                SketchKind::StrConcat => self.concat(&ctx, id, room, &mut out),
                SketchKind::StrReplace => self.replace(&ctx, id, room, &mut out),
                SketchKind::StrSubstr => self.substr(&ctx, id, room, &mut out),
                _ => self.bitvec(&ctx, k, id, room, &mut out),
            }
        }
        self.hits += out.len() as u64;
        out
    }

    fn bitvec(&self, ctx: &Ctx, k: SketchKind, id: usize, limit: usize, out: &mut Vec<Program>) {
        let Some(Value::Bv(_)) = ctx.out(id).first() else { return };
        let p = bvs(ctx.out(id));
        let o = bvs(ctx.target);
        let push = |prog: Option<Program>, out: &mut Vec<Program>| {
            if let Some(prog) = prog {
                if out.len() < limit && !out.contains(&prog) {
                    out.push(prog);
                }
            }
        };
        let needed: Option<Vec<Bv>> = match k {
            SketchKind::Add => Some(p.iter().zip(&o).map(|(p, o)| o.sub(*p)).collect()),
            SketchKind::Xor => Some(p.iter().zip(&o).map(|(p, o)| xor(*o, *p)).collect()),
            SketchKind::NotAdd => Some(p.iter().zip(&o).map(|(p, o)| o.not().sub(*p)).collect()),
            SketchKind::NegAdd => Some(p.iter().zip(&o).map(|(p, o)| o.neg().sub(*p)).collect()),
            SketchKind::NotXor => Some(p.iter().zip(&o).map(|(p, o)| xor(o.not(), *p)).collect()),
            SketchKind::NegXor => Some(p.iter().zip(&o).map(|(p, o)| xor(o.neg(), *p)).collect()),
            _ => None,
        };
        if let Some(needed) = needed {
            let key: Vec<Value> = needed.into_iter().map(Value::Bv).collect();
            let Some(q) = ctx.bank.lookup_outputs(&key) else { return };
            push(match k {
                SketchKind::Add => ctx.complete_comm(Builtin::BvAdd, id, q),
                SketchKind::Xor => ctx.complete_comm(Builtin::BvXor, id, q),
                SketchKind::NotAdd => ctx.complete_nested(Builtin::BvNot, Builtin::BvAdd, id, q),
                SketchKind::NegAdd => ctx.complete_nested(Builtin::BvNeg, Builtin::BvAdd, id, q),
                SketchKind::NotXor => ctx.complete_nested(Builtin::BvNot, Builtin::BvXor, id, q),
                SketchKind::NegXor => ctx.complete_nested(Builtin::BvNeg, Builtin::BvXor, id, q),
                _ => unreachable!(),
            }, out);
            return;
        }
        match k {
            SketchKind::And | SketchKind::Or => {
                let (list, b, f): (&[usize], Builtin, BitOp) = if k == SketchKind::And {
                    if !p.iter().zip(&o).all(|(p, o)| bitwise_le(*o, *p)) {
                        return;
                    }
                    (&self.and_supers, Builtin::BvAnd, |a, b| a & b)
                } else {
                    if !p.iter().zip(&o).all(|(p, o)| bitwise_le(*p, *o)) {
                        return;
                    }
                    (&self.or_subs, Builtin::BvOr, |a, b| a | b)
                };
                for &q in list {
                    if out.len() >= limit {
                        return;
                    }
                    let qv = bvs(ctx.out(q));
                    if p.iter().zip(&qv).zip(&o).all(|((p, q), o)| f(p.bits(), q.bits()) == o.bits()) {
                        push(ctx.complete_comm(b, id, q), out);
                    }
                }
            }
            SketchKind::Mul => {
                let sols0 = mul_solutions(p[0], o[0]);
                let consistent = |q: usize| {
                    let qv = bvs(ctx.out(q));
                    p.iter().zip(&qv).zip(&o).all(|((p, q), o)| p.mul(*q) == *o)
                };
                if sols0.len() > 256 {
                    for &q in &self.bitvecs {
                        if out.len() >= limit {
                            return;
                        }
                        if consistent(q) {
                            push(ctx.complete_comm(Builtin::BvMul, id, q), out);
                        }
                    }
                } else {
                    for x in sols0 {
                        for &q in self.first.get(&Value::Bv(x)).map(Vec::as_slice).unwrap_or(&[]) {
                            if out.len() >= limit {
                                return;
                            }
                            if consistent(q) {
                                push(ctx.complete_comm(Builtin::BvMul, id, q), out);
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }

    fn concat(&self, ctx: &Ctx, id: usize, limit: usize, out: &mut Vec<Program>) {
        let Some(Value::Str(_)) = ctx.out(id).first() else { return };
        let p = strs(ctx.out(id));
        let o = strs(ctx.target);
        if p.iter().zip(&o).all(|(p, o)| o.starts_with(p)) {
            let rest: Vec<Value> = p.iter().zip(&o).map(|(p, o)| Value::str(&o[p.len()..])).collect();
            if let Some(q) = ctx.bank.lookup_outputs(&rest) {
                if let Some(prog) = ctx.complete(Builtin::StrConcat, &[id, q]) {
                    out.push(prog);
                }
            }
        }
        if out.len() >= limit {
            return;
        }
        if p.iter().zip(&o).all(|(p, o)| o.ends_with(p)) {
            let rest: Vec<Value> =
                p.iter().zip(&o).map(|(p, o)| Value::str(&o[..o.len() - p.len()])).collect();
            if let Some(q) = ctx.bank.lookup_outputs(&rest) {
                if let Some(prog) = ctx.complete(Builtin::StrConcat, &[q, id]) {
                    if !out.contains(&prog) {
                        out.push(prog);
                    }
                }
            }
        }
    }

    fn by_first(&self, v: &str) -> &[usize] {
        self.first.get(&Value::str(v)).map(Vec::as_slice).unwrap_or(&[])
    }

    fn replace(&self, ctx: &Ctx, id: usize, limit: usize, out: &mut Vec<Program>) {
        let Some(Value::Str(_)) = ctx.out(id).first() else { return };
        let p = strs(ctx.out(id));
        let o = strs(ctx.target);
        let push = |prog: Option<Program>, out: &mut Vec<Program>| {
            if let Some(prog) = prog {
                if out.len() < limit && !out.contains(&prog) {
                    out.push(prog);
                }
            }
        };

        // replace(p, a, b): `a` is a substring of p on example 0
        for a_val in substrings(p[0]) {
            for &a in self.by_first(a_val) {
                if out.len() >= limit {
                    return;
                }
                let av = strs(ctx.out(a));
                let mut need: Vec<Option<String>> = Vec::with_capacity(p.len());
                let mut ok = true;
                for k in 0..p.len() {
                    match required_replacement(p[k], av[k], o[k]) {
                        Ok(x) => need.push(x),
                        Err(()) => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                if need.iter().all(Option::is_some) {
                    let key: Vec<Value> = need.iter().map(|x| Value::str(x.as_deref().unwrap())).collect();
                    if let Some(b) = ctx.bank.lookup_outputs(&key) {
                        push(ctx.complete(Builtin::StrReplace, &[id, a, b]), out);
                    }
                } else if let Some(Some(first)) = need.first() {
                    for &b in self.by_first(first) {
                        push(ctx.complete(Builtin::StrReplace, &[id, a, b]), out);
                    }
                }
            }
        }

        // replace(a, p, b): b is a substring of o on example 0, a = A + p + B
        for (start, end) in substring_spans(o[0]) {
            let b_val = &o[0][start..end];
            if self.by_first(b_val).is_empty() {
                continue;
            }
            let a_val = format!("{}{}{}", &o[0][..start], p[0], &o[0][end..]);
            for &a in self.by_first(&a_val) {
                for &b in self.by_first(b_val) {
                    if out.len() >= limit {
                        return;
                    }
                    push(ctx.complete(Builtin::StrReplace, &[a, id, b]), out);
                }
            }
        }

        // replace(a, b, p): p occurs in o on example 0, a = A + b + B
        let mut from = 0;
        while let Some(pos) = o[0][from..].find(p[0]).map(|i| i + from) {
            let (pre, post) = (&o[0][..pos], &o[0][pos + p[0].len()..]);
            for &a in &self.strings {
                let a0 = ctx.out(a)[0].as_str().unwrap();
                if a0.len() < pre.len() + post.len() || !a0.starts_with(pre) || !a0.ends_with(post) {
                    continue;
                }
                let mid = &a0[pre.len()..a0.len() - post.len()];
                for &b in self.by_first(mid) {
                    if out.len() >= limit {
                        return;
                    }
                    push(ctx.complete(Builtin::StrReplace, &[a, b, id]), out);
                }
            }
            if p[0].is_empty() || pos + 1 > o[0].len() {
                break;
            }
            from = pos + 1;
        }
    }

    fn substr(&mut self, ctx: &Ctx, id: usize, limit: usize, out: &mut Vec<Program>) {
        let push = |prog: Option<Program>, out: &mut Vec<Program>| {
            if let Some(prog) = prog {
                if out.len() < limit && !out.contains(&prog) {
                    out.push(prog);
                }
            }
        };
        let o = strs(ctx.target);
        match ctx.out(id).first() {
            Some(Value::Str(_)) => {
                let p = strs(ctx.out(id));
                let Some(starts) = p
                    .iter()
                    .zip(&o)
                    .map(|(p, o)| p.find(o).map(|i| i as i64))
                    .collect::<Option<Vec<i64>>>()
                else {
                    return;
                };
                self.supers.entry(starts.clone()).or_default().push(id);
                let key: Vec<Value> = starts.iter().map(|&i| Value::Int(i)).collect();
                if let Some(k) = ctx.bank.lookup_outputs(&key) {
                    self.pairs.push((id, k));
                    for &l in &self.ints {
                        if out.len() >= limit {
                            return;
                        }
                        if length_fits(&p, &starts, &o, ctx.out(l)) {
                            push(ctx.complete(Builtin::StrSubstr, &[id, k, l]), out);
                        }
                    }
                }
            }
            Some(Value::Int(_)) => {
                self.ints.push(id);
                let v: Vec<i64> = ctx.out(id).iter().map(|x| x.as_int().unwrap()).collect();
                // as a length for a known (superstring, start) pair
                for &(s, k) in &self.pairs {
                    if out.len() >= limit {
                        return;
                    }
                    let sv = strs(ctx.out(s));
                    let kv: Vec<i64> = ctx.out(k).iter().map(|x| x.as_int().unwrap()).collect();
                    if length_fits(&sv, &kv, &o, ctx.out(id)) {
                        push(ctx.complete(Builtin::StrSubstr, &[s, k, id]), out);
                    }
                }
                // as a start index
                if let Some(ss) = self.supers.get(&v).cloned() {
                    for s in ss {
                        self.pairs.push((s, id));
                        let sv = strs(ctx.out(s));
                        for &l in &self.ints {
                            if out.len() >= limit {
                                return;
                            }
                            if length_fits(&sv, &v, &o, ctx.out(l)) {
                                push(ctx.complete(Builtin::StrSubstr, &[s, id, l]), out);
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }
}

fn xor(a: Bv, b: Bv) -> Bv {
    Bv::new(a.width(), a.bits() ^ b.bits())
}

/// Distinct substrings of `s`, shortest first.
fn substrings(s: &str) -> Vec<&str> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for len in 0..=s.len() {
        for i in 0..=s.len() - len {
            let t = &s[i..i + len];
            if seen.insert(t) {
                out.push(t);
            }
        }
    }
    out
}

fn substring_spans(s: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..=s.len() {
        for j in i..=s.len() {
            out.push((i, j));
        }
    }
    out
}

/// Replacement `b` with `replace(p, a, b) = o`. `Ok(None)`: any `b` works.
fn required_replacement(p: &str, a: &str, o: &str) -> Result<Option<String>, ()> {
    if a.is_empty() {
        return o.strip_suffix(p).map(|b| Some(b.to_string())).ok_or(());
    }
    match p.find(a) {
        None => {
            if p == o {
                Ok(None)
            } else {
                Err(())
            }
        }
        Some(pos) => {
            let (pre, post) = (&p[..pos], &p[pos + a.len()..]);
            if o.len() >= pre.len() + post.len() && o.starts_with(pre) && o.ends_with(post) {
                Ok(Some(o[pre.len()..o.len() - post.len()].to_string()))
            } else {
                Err(())
            }
        }
    }
}

fn length_fits(s: &[&str], starts: &[i64], o: &[&str], lens: &[Value]) -> bool {
    s.iter().zip(starts).zip(o).zip(lens).all(|(((s, &k), o), l)| {
        let Some(l) = l.as_int() else { return false };
        let r = apply_builtin(
            Builtin::StrSubstr,
            &[&Value::str(s), &Value::Int(k), &Value::Int(l)],
        );
        matches!(r, Ok(Value::Str(v)) if &*v == *o)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_inverse_example() {
        let s = mul_solutions(Bv::new(8, 3), Bv::new(8, 6));
        assert_eq!(s, vec![Bv::new(8, 2)]);
        assert_eq!(inverse_mod_pow2(3, 8), 171);
    }

    #[test]
    fn mul_matches_brute_force_small() {
        for a in 0..16u64 {
            for o in 0..16u64 {
                let want: Vec<Bv> = (0..16u64)
                    .filter(|x| (a * x) & 15 == o)
                    .map(|x| Bv::new(4, x))
                    .collect();
                assert_eq!(mul_solutions(Bv::new(4, a), Bv::new(4, o)), want, "{a} {o}");
            }
        }
    }

    #[test]
    fn replacement_inverse() {
        assert_eq!(required_replacement("POPL Conf", " Conf", "POPL"), Ok(Some(String::new())));
        assert_eq!(required_replacement("abc", "", "xabc"), Ok(Some("x".into())));
        assert_eq!(required_replacement("abc", "z", "abc"), Ok(None));
        assert_eq!(required_replacement("abc", "z", "abd"), Err(()));
    }
}
