//! Grammars, programs, sketches and the subprogram relation.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

use crate::semantics::Value;

/// Value sorts. Bitvector widths range over 1..=64.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    String,
    Int,
    Bool,
    BitVec(u32),
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::String => write!(f, "String"),
            Sort::Int => write!(f, "Int"),
            Sort::Bool => write!(f, "Bool"),
            Sort::BitVec(w) => write!(f, "(_ BitVec {w})"),
        }
    }
}

/// Built-in operators of the string and bitvector theories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Builtin {
    StrConcat,
    StrReplace,
    StrSubstr,
    StrAt,
    StrLen,
    IntToStr,
    BvNot,
    BvNeg,
    BvAnd,
    BvOr,
    BvXor,
    BvAdd,
    BvSub,
    BvMul,
    BvUdiv,
    BvUrem,
    BvSdiv,
    BvSrem,
    BvShl,
    BvLshr,
    BvAshr,
}

impl Builtin {
    pub const ALL: [Builtin; 21] = [
        Builtin::StrConcat,
        Builtin::StrReplace,
        Builtin::StrSubstr,
        Builtin::StrAt,
        Builtin::StrLen,
        Builtin::IntToStr,
        Builtin::BvNot,
        Builtin::BvNeg,
        Builtin::BvAnd,
        Builtin::BvOr,
        Builtin::BvXor,
        Builtin::BvAdd,
        Builtin::BvSub,
        Builtin::BvMul,
        Builtin::BvUdiv,
        Builtin::BvUrem,
        Builtin::BvSdiv,
        Builtin::BvSrem,
        Builtin::BvShl,
        Builtin::BvLshr,
        Builtin::BvAshr,
    ];

    /// SMT-LIB name.
    pub fn name(self) -> &'static str {
        match self {
            Builtin::StrConcat => "str.++",
            Builtin::StrReplace => "str.replace",
            Builtin::StrSubstr => "str.substr",
            Builtin::StrAt => "str.at",
            Builtin::StrLen => "str.len",
            Builtin::IntToStr => "int.to.str",
            Builtin::BvNot => "bvnot",
            Builtin::BvNeg => "bvneg",
            Builtin::BvAnd => "bvand",
            Builtin::BvOr => "bvor",
            Builtin::BvXor => "bvxor",
            Builtin::BvAdd => "bvadd",
            Builtin::BvSub => "bvsub",
            Builtin::BvMul => "bvmul",
            Builtin::BvUdiv => "bvudiv",
            Builtin::BvUrem => "bvurem",
            Builtin::BvSdiv => "bvsdiv",
            Builtin::BvSrem => "bvsrem",
            Builtin::BvShl => "bvshl",
            Builtin::BvLshr => "bvlshr",
            Builtin::BvAshr => "bvashr",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        if name == "str.from_int" {
            return Some(Builtin::IntToStr);
        }
        Builtin::ALL.iter().copied().find(|b| b.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::StrLen | Builtin::IntToStr | Builtin::BvNot | Builtin::BvNeg => 1,
            Builtin::StrReplace | Builtin::StrSubstr => 3,
            _ => 2,
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(
            self,
            Builtin::BvAnd | Builtin::BvOr | Builtin::BvXor | Builtin::BvAdd | Builtin::BvMul
        )
    }

    /// Result sort for the given argument sorts, or `None` if ill-sorted.
    pub fn result_sort(self, args: &[Sort]) -> Option<Sort> {
        use Sort::*;
        if args.len() != self.arity() {
            return None;
        }
        match self {
            Builtin::StrConcat => (args == [String, String]).then_some(String),
            Builtin::StrReplace => (args == [String, String, String]).then_some(String),
            Builtin::StrSubstr => (args == [String, Int, Int]).then_some(String),
            Builtin::StrAt => (args == [String, Int]).then_some(String),
            Builtin::StrLen => (args == [String]).then_some(Int),
            Builtin::IntToStr => (args == [Int]).then_some(String),
            _ => {
                let w = match args[0] {
                    BitVec(w) => w,
                    _ => return None,
                };
                args.iter().all(|s| *s == BitVec(w)).then_some(BitVec(w))
            }
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Terminal descriptor: a variable, a literal constant, or a built-in operator.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Var { index: u32, name: Arc<str>, sort: Sort },
    Const(Value),
    Builtin(Builtin),
}

impl Op {
    pub fn var(index: u32, name: &str, sort: Sort) -> Op {
        Op::Var { index, name: name.into(), sort }
    }

    pub fn arity(&self) -> usize {
        match self {
            Op::Builtin(b) => b.arity(),
            _ => 0,
        }
    }

    pub fn result_sort(&self, args: &[Sort]) -> Option<Sort> {
        match self {
            Op::Var { sort, .. } => args.is_empty().then_some(*sort),
            Op::Const(v) => args.is_empty().then_some(v.sort()),
            Op::Builtin(b) => b.result_sort(args),
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Var { name, .. } => f.write_str(name),
            Op::Const(v) => write!(f, "{v}"),
            Op::Builtin(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AstError {
    #[error("{op} expects {expected} arguments, got {got}")]
    Arity { op: String, expected: usize, got: usize },
    #[error("ill-sorted application of {op} to ({args})")]
    Sort { op: String, args: String },
}

struct Node {
    op: Op,
    children: Vec<Program>,
    size: u32,
    sort: Sort,
    hash: u64,
}

/// An immutable operator tree. Cloning is a reference-count bump; hashing is O(1).
#[derive(Clone)]
pub struct Program(Arc<Node>);

impl Program {
    pub fn leaf(op: Op) -> Result<Program, AstError> {
        Program::apply(op, Vec::new())
    }

    pub fn apply(op: Op, children: Vec<Program>) -> Result<Program, AstError> {
        if children.len() != op.arity() {
            return Err(AstError::Arity {
                op: op.to_string(),
                expected: op.arity(),
                got: children.len(),
            });
        }
        let sorts: Vec<Sort> = children.iter().map(|c| c.sort()).collect();
        let sort = op.result_sort(&sorts).ok_or_else(|| AstError::Sort {
            op: op.to_string(),
            args: sorts.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" "),
        })?;
        Ok(Program::build(op, children, sort))
    }

    fn build(op: Op, children: Vec<Program>, sort: Sort) -> Program {
        let mut h = DefaultHasher::new();
        op.hash(&mut h);
        for c in &children {
            h.write_u64(c.0.hash);
        }
        let size = 1 + children.iter().map(|c| c.0.size).sum::<u32>();
        Program(Arc::new(Node {
            op,
            children,
            size,
            sort,
            hash: h.finish(),
        }))
    }

    pub fn op(&self) -> &Op {
        &self.0.op
    }

    pub fn children(&self) -> &[Program] {
        &self.0.children
    }

    pub fn sort(&self) -> Sort {
        self.0.sort
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        self.0.size as usize
    }

    pub fn is_leaf(&self) -> bool {
        self.0.children.is_empty()
    }

    /// All subtrees including `self`, in post-order without duplicates.
    pub fn subprograms(&self) -> Vec<Program> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        self.collect_subprograms(&mut seen, &mut out);
        out
    }

    fn collect_subprograms(&self, seen: &mut HashSet<Program>, out: &mut Vec<Program>) {
        for c in self.children() {
            c.collect_subprograms(seen, out);
        }
        if seen.insert(self.clone()) {
            out.push(self.clone());
        }
    }

    /// `self ⊑ other`: self occurs as a subtree of other.
    pub fn is_subprogram_of(&self, other: &Program) -> bool {
        self == other || other.children().iter().any(|c| self.is_subprogram_of(c))
    }
}

impl PartialEq for Program {
    fn eq(&self, other: &Program) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.hash == other.0.hash
                && self.0.size == other.0.size
                && self.0.op == other.0.op
                && self.0.children == other.0.children)
    }
}

impl Eq for Program {}

impl Hash for Program {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_leaf() {
            return write!(f, "{}", self.op());
        }
        write!(f, "({}", self.op())?;
        for c in self.children() {
            write!(f, " {c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Nonterminal index into `Grammar::nonterminals`.
pub type NtId = usize;

/// A program with holes labelled by nonterminals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Sketch {
    Hole(NtId),
    Node(Op, Vec<Sketch>),
}

impl Sketch {
    /// Number of holes.
    pub fn arity(&self) -> usize {
        match self {
            Sketch::Hole(_) => 1,
            Sketch::Node(_, cs) => cs.iter().map(Sketch::arity).sum(),
        }
    }

    /// Hole labels, left to right.
    pub fn holes(&self) -> Vec<NtId> {
        let mut out = Vec::new();
        self.collect_holes(&mut out);
        out
    }

    fn collect_holes(&self, out: &mut Vec<NtId>) {
        match self {
            Sketch::Hole(n) => out.push(*n),
            Sketch::Node(_, cs) => cs.iter().for_each(|c| c.collect_holes(out)),
        }
    }

    /// The sketch `op(?, …, ?)` with every child of `p` abstracted to a hole
    /// labelled `nt`.
    pub fn abstract_children(p: &Program, nt: NtId) -> Sketch {
        Sketch::Node(
            p.op().clone(),
            p.children().iter().map(|_| Sketch::Hole(nt)).collect(),
        )
    }

    /// Fill holes left to right.
    pub fn substitute(&self, args: &[Program]) -> Result<Program, AstError> {
        if args.len() != self.arity() {
            return Err(AstError::Arity {
                op: "sketch".into(),
                expected: self.arity(),
                got: args.len(),
            });
        }
        let mut it = args.iter();
        self.fill(&mut it)
    }

    fn fill<'a>(&self, it: &mut impl Iterator<Item = &'a Program>) -> Result<Program, AstError> {
        match self {
            Sketch::Hole(_) => Ok(it.next().expect("arity checked").clone()),
            Sketch::Node(op, cs) => {
                let children = cs.iter().map(|c| c.fill(it)).collect::<Result<_, _>>()?;
                Program::apply(op.clone(), children)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nonterminal {
    pub name: String,
    pub sort: Sort,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Production {
    pub lhs: NtId,
    pub rhs: Sketch,
}

/// A context-free grammar. Right-hand sides are sketches, so nested terms
/// such as `(bvnot (bvadd S S))` are allowed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grammar {
    pub nonterminals: Vec<Nonterminal>,
    pub productions: Vec<Production>,
    pub start: NtId,
}

/// A grammar problem located at a production.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub production: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.production {
            Some(i) => write!(f, "production {i}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl Grammar {
    pub fn nt_by_name(&self, name: &str) -> Option<NtId> {
        self.nonterminals.iter().position(|n| n.name == name)
    }

    /// Distinct terminal descriptors in order of first appearance.
    pub fn terminals(&self) -> Vec<Op> {
        fn walk(s: &Sketch, seen: &mut HashSet<Op>, out: &mut Vec<Op>) {
            if let Sketch::Node(op, cs) = s {
                if seen.insert(op.clone()) {
                    out.push(op.clone());
                }
                cs.iter().for_each(|c| walk(c, seen, out));
            }
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for p in &self.productions {
            walk(&p.rhs, &mut seen, &mut out);
        }
        out
    }

    pub fn render_rhs(&self, s: &Sketch) -> String {
        match s {
            Sketch::Hole(n) => self
                .nonterminals
                .get(*n)
                .map(|n| n.name.clone())
                .unwrap_or_else(|| format!("<nt {n}>")),
            Sketch::Node(op, cs) if cs.is_empty() => op.to_string(),
            Sketch::Node(op, cs) => {
                let args: Vec<String> = cs.iter().map(|c| self.render_rhs(c)).collect();
                format!("({op} {})", args.join(" "))
            }
        }
    }

    fn rhs_sort(&self, s: &Sketch, prod: usize, diags: &mut Vec<Diagnostic>) -> Option<Sort> {
        match s {
            Sketch::Hole(n) => match self.nonterminals.get(*n) {
                Some(nt) => Some(nt.sort),
                None => {
                    diags.push(Diagnostic {
                        production: Some(prod),
                        message: format!("undeclared nonterminal {n}"),
                    });
                    None
                }
            },
            Sketch::Node(op, cs) => {
                let sorts: Vec<Option<Sort>> =
                    cs.iter().map(|c| self.rhs_sort(c, prod, diags)).collect();
                if cs.len() != op.arity() {
                    diags.push(Diagnostic {
                        production: Some(prod),
                        message: format!(
                            "{op} expects {} arguments, got {} in {}",
                            op.arity(),
                            cs.len(),
                            self.render_rhs(s)
                        ),
                    });
                    return None;
                }
                let sorts: Option<Vec<Sort>> = sorts.into_iter().collect();
                let sorts = sorts?;
                let res = op.result_sort(&sorts);
                if res.is_none() {
                    diags.push(Diagnostic {
                        production: Some(prod),
                        message: format!("ill-sorted term {}", self.render_rhs(s)),
                    });
                }
                res
            }
        }
    }
}

/// Check arities, declarations and sorts. Diagnostics name the offending production.
pub fn validate_grammar(g: &Grammar) -> Result<(), Vec<Diagnostic>> {
    let mut diags = Vec::new();
    if g.start >= g.nonterminals.len() {
        diags.push(Diagnostic {
            production: None,
            message: format!("start symbol {} is not declared", g.start),
        });
    }
    for (i, p) in g.productions.iter().enumerate() {
        let Some(lhs) = g.nonterminals.get(p.lhs) else {
            diags.push(Diagnostic {
                production: Some(i),
                message: format!("undeclared left-hand side {}", p.lhs),
            });
            continue;
        };
        if let Some(s) = g.rhs_sort(&p.rhs, i, &mut diags) {
            if s != lhs.sort {
                diags.push(Diagnostic {
                    production: Some(i),
                    message: format!(
                        "{} has sort {} but {} has sort {s}",
                        lhs.name,
                        lhs.sort,
                        g.render_rhs(&p.rhs)
                    ),
                });
            }
        }
    }
    if diags.is_empty() {
        Ok(())
    } else {
        Err(diags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &str) -> Program {
        Program::leaf(Op::Const(Value::str(v))).unwrap()
    }

    fn x() -> Program {
        Program::leaf(Op::var(0, "x", Sort::String)).unwrap()
    }

    fn replace(a: Program, b: Program, c: Program) -> Program {
        Program::apply(Op::Builtin(Builtin::StrReplace), vec![a, b, c]).unwrap()
    }

    #[test]
    fn sizes() {
        assert_eq!(x().size(), 1);
        let cc = Program::apply(Op::Builtin(Builtin::StrConcat), vec![x(), x()]).unwrap();
        assert_eq!(cc.size(), 3);
        let sol = replace(replace(x(), s("Conference"), s("")), s("City"), s(""));
        assert_eq!(sol.size(), 7);
    }

    #[test]
    fn subprogram_sets() {
        assert_eq!(x().subprograms(), vec![x()]);
        let p = Program::apply(Op::Builtin(Builtin::StrConcat), vec![x(), s("C")]).unwrap();
        let subs: HashSet<Program> = p.subprograms().into_iter().collect();
        let want: HashSet<Program> = [x(), s("C"), p.clone()].into_iter().collect();
        assert_eq!(subs, want);
        assert!(x().is_subprogram_of(&p));
        assert!(!p.is_subprogram_of(&x()));
    }

    #[test]
    fn substitution() {
        assert_eq!(Sketch::Hole(0).substitute(&[x()]).unwrap(), x());
        let sk = Sketch::Node(
            Op::Builtin(Builtin::StrReplace),
            vec![
                Sketch::Hole(0),
                Sketch::Node(Op::Const(Value::str("Conference")), vec![]),
                Sketch::Node(Op::Const(Value::str("")), vec![]),
            ],
        );
        assert_eq!(sk.arity(), 1);
        assert_eq!(
            sk.substitute(&[x()]).unwrap(),
            replace(x(), s("Conference"), s(""))
        );
        assert!(sk.substitute(&[]).is_err());
    }

    #[test]
    fn ill_sorted_application() {
        let bv = Program::leaf(Op::Const(Value::bv(8, 1))).unwrap();
        assert!(Program::apply(Op::Builtin(Builtin::StrConcat), vec![x(), bv]).is_err());
        assert!(Program::apply(Op::Builtin(Builtin::StrConcat), vec![x()]).is_err());
    }

    #[test]
    fn grammar_diagnostics() {
        let nts = vec![Nonterminal { name: "S".into(), sort: Sort::String }];
        let bad = Grammar {
            nonterminals: nts.clone(),
            productions: vec![Production {
                lhs: 0,
                rhs: Sketch::Node(Op::Builtin(Builtin::StrConcat), vec![Sketch::Hole(0)]),
            }],
            start: 0,
        };
        let d = validate_grammar(&bad).unwrap_err();
        assert_eq!(d[0].production, Some(0));
        let undeclared = Grammar {
            nonterminals: nts,
            productions: vec![Production { lhs: 0, rhs: Sketch::Hole(3) }],
            start: 0,
        };
        assert!(validate_grammar(&undeclared).is_err());
    }
}
