//! Task ingestion from a SyGuS subset and a JSON mirror, and solution output.
//!
//! Accepted commands: `set-logic`, `set-option`, `declare-var`, `synth-fun`
//! with a grammar (with or without the nonterminal declaration list),
//! `constraint` over literal examples only, and `check-synth`.

pub mod json;
pub mod sexp;

use std::collections::HashMap;

use thiserror::Error;

use crate::ast::{validate_grammar, Builtin, Grammar, Nonterminal, Op, Production, Program, Sketch, Sort};
use crate::semantics::{ExampleError, ExampleSet, Value};
use crate::task::{Logic, SynthesisTask};
pub use sexp::{Pos, Sexp, SyntaxError};

/// A task the frontend cannot accept. Every variant renders as a single line.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrontendError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("{pos}: unsupported operator {name}")]
    UnsupportedOperator { name: String, pos: Pos },
    #[error("{pos}: non-constant argument {arg} in example constraint")]
    NonConstantArgument { arg: String, pos: Pos },
    #[error("{pos}: constraint is not an input-output example")]
    NotAnExample { pos: Pos },
    #[error("{pos}: {message}")]
    Malformed { pos: Pos, message: String },
    #[error("invalid grammar: {0}")]
    Grammar(String),
    #[error("invalid examples: {0}")]
    Examples(#[from] ExampleError),
    #[error("invalid JSON task: {0}")]
    Json(String),
}

fn malformed<T>(pos: Pos, message: impl Into<String>) -> Result<T, FrontendError> {
    Err(FrontendError::Malformed { pos, message: message.into() })
}

pub fn parse_sort(s: &Sexp) -> Result<Sort, FrontendError> {
    match s {
        Sexp::Atom(a, p) => match a.as_str() {
            "String" => Ok(Sort::String),
            "Int" => Ok(Sort::Int),
            "Bool" => Ok(Sort::Bool),
            _ => malformed(*p, format!("unknown sort {a}")),
        },
        Sexp::List(l, p) => match l.as_slice() {
            [Sexp::Atom(u, _), Sexp::Atom(bv, _), Sexp::Atom(w, _)] if u == "_" && bv == "BitVec" => {
                match w.parse::<u32>() {
                    Ok(w) if (1..=64).contains(&w) => Ok(Sort::BitVec(w)),
                    _ => malformed(*p, format!("bitvector width {w} outside 1..=64")),
                }
            }
            _ => malformed(*p, format!("unknown sort {s}")),
        },
        Sexp::Str(_, p) => malformed(*p, "expected a sort"),
    }
}

/// Decode an atom as a literal: numerals, `#x`/`#b` bitvectors, booleans.
fn atom_literal(a: &str) -> Option<Result<Value, String>> {
    if let Some(h) = a.strip_prefix("#x") {
        let w = 4 * h.len() as u32;
        if h.is_empty() || w > 64 {
            return Some(Err(format!("bitvector literal {a} must have 1 to 16 hex digits")));
        }
        return Some(u64::from_str_radix(h, 16).map(|v| Value::bv(w, v)).map_err(|e| e.to_string()));
    }
    if let Some(b) = a.strip_prefix("#b") {
        let w = b.len() as u32;
        if b.is_empty() || w > 64 {
            return Some(Err(format!("bitvector literal {a} must have 1 to 64 bits")));
        }
        return Some(u64::from_str_radix(b, 2).map(|v| Value::bv(w, v)).map_err(|e| e.to_string()));
    }
    match a {
        "true" => return Some(Ok(Value::Bool(true))),
        "false" => return Some(Ok(Value::Bool(false))),
        _ => {}
    }
    if a.bytes().all(|c| c.is_ascii_digit()) && !a.is_empty() {
        return Some(a.parse::<i64>().map(Value::Int).map_err(|e| e.to_string()));
    }
    None
}

/// A literal constant, or `None` if `s` is not one.
pub fn literal(s: &Sexp) -> Result<Option<Value>, FrontendError> {
    match s {
        Sexp::Str(v, _) => Ok(Some(Value::str(v))),
        Sexp::Atom(a, p) => match atom_literal(a) {
            Some(Ok(v)) => Ok(Some(v)),
            Some(Err(m)) => malformed(*p, m),
            None => Ok(None),
        },
        Sexp::List(l, p) => match l.as_slice() {
            [Sexp::Atom(m, _), Sexp::Atom(n, _)] if m == "-" => match atom_literal(n) {
                Some(Ok(Value::Int(i))) => Ok(Some(Value::Int(-i))),
                _ => malformed(*p, format!("bad negative literal {s}")),
            },
            [Sexp::Atom(u, _), Sexp::Atom(bv, _), Sexp::Atom(w, _)] if u == "_" && bv.starts_with("bv") => {
                let (Ok(v), Ok(w)) = (bv[2..].parse::<u64>(), w.parse::<u32>()) else {
                    return malformed(*p, format!("bad bitvector literal {s}"));
                };
                if !(1..=64).contains(&w) {
                    return malformed(*p, format!("bitvector width {w} outside 1..=64"));
                }
                Ok(Some(Value::bv(w, v)))
            }
            _ => Ok(None),
        },
    }
}

fn builtin(name: &str, pos: Pos) -> Result<Builtin, FrontendError> {
    Builtin::from_name(name).ok_or_else(|| FrontendError::UnsupportedOperator { name: name.into(), pos })
}

/// Names in scope while reading terms.
struct Scope<'a> {
    nts: &'a HashMap<String, usize>,
    vars: &'a [(String, Sort)],
}

impl Scope<'_> {
    fn sketch(&self, s: &Sexp) -> Result<Sketch, FrontendError> {
        if let Some(v) = literal(s)? {
            return Ok(Sketch::Node(Op::Const(v), vec![]));
        }
        match s {
            Sexp::Atom(a, p) => {
                if let Some(&nt) = self.nts.get(a) {
                    Ok(Sketch::Hole(nt))
                } else if let Some(i) = self.vars.iter().position(|(n, _)| n == a) {
                    Ok(Sketch::Node(Op::var(i as u32, a, self.vars[i].1), vec![]))
                } else {
                    malformed(*p, format!("unknown symbol {a}"))
                }
            }
            Sexp::List(l, p) => {
                let Some((Sexp::Atom(head, hp), args)) = l.split_first() else {
                    return malformed(*p, format!("expected an operator application, found {s}"));
                };
                if matches!(head.as_str(), "Constant" | "Variable") {
                    return Err(FrontendError::UnsupportedOperator { name: head.clone(), pos: *hp });
                }
                let b = builtin(head, *hp)?;
                if args.len() != b.arity() {
                    return malformed(*p, format!("{head} expects {} arguments, got {}", b.arity(), args.len()));
                }
                let args = args.iter().map(|a| self.sketch(a)).collect::<Result<_, _>>()?;
                Ok(Sketch::Node(Op::Builtin(b), args))
            }
            Sexp::Str(..) => unreachable!("string literals are handled above"),
        }
    }
}

/// Read a program body over the given parameters.
pub fn parse_program_sexp(s: &Sexp, vars: &[(String, Sort)]) -> Result<Program, FrontendError> {
    let nts = HashMap::new();
    let sk = Scope { nts: &nts, vars }.sketch(s)?;
    sk.substitute(&[]).map_err(|e| FrontendError::Malformed { pos: s.pos(), message: e.to_string() })
}

pub fn parse_program(text: &str, vars: &[(String, Sort)]) -> Result<Program, FrontendError> {
    parse_program_sexp(&sexp::parse_one(text)?, vars)
}

/// Build and validate a grammar from `(Name Sort (rhs ...))` entries.
fn parse_grammar(
    entries: &[Sexp],
    decls: Option<&[Sexp]>,
    vars: &[(String, Sort)],
    pos: Pos,
) -> Result<Grammar, FrontendError> {
    let mut nonterminals = Vec::new();
    let mut nts = HashMap::new();
    let mut declare = |e: &Sexp| -> Result<(), FrontendError> {
        match e.list() {
            Some([Sexp::Atom(name, p), sort, ..]) => {
                if nts.insert(name.clone(), nonterminals.len()).is_some() {
                    return malformed(*p, format!("nonterminal {name} declared twice"));
                }
                nonterminals.push(Nonterminal { name: name.clone(), sort: parse_sort(sort)? });
                Ok(())
            }
            _ => malformed(e.pos(), format!("expected (Name Sort ...), found {e}")),
        }
    };
    match decls {
        Some(d) => d.iter().try_for_each(&mut declare)?,
        None => entries.iter().try_for_each(&mut declare)?,
    }
    if nonterminals.is_empty() {
        return malformed(pos, "grammar has no nonterminals");
    }
    let scope = Scope { nts: &nts, vars };
    let mut productions = Vec::new();
    for e in entries {
        let Some([Sexp::Atom(name, p), sort, Sexp::List(rhss, _)]) = e.list() else {
            return malformed(e.pos(), format!("expected (Name Sort (rules ...)), found {e}"));
        };
        let Some(&lhs) = nts.get(name) else {
            return malformed(*p, format!("nonterminal {name} is not declared"));
        };
        if parse_sort(sort)? != nonterminals[lhs].sort {
            return malformed(sort.pos(), format!("nonterminal {name} declared with a different sort"));
        }
        for r in rhss {
            productions.push(Production { lhs, rhs: scope.sketch(r)? });
        }
    }
    let g = Grammar { nonterminals, productions, start: 0 };
    validate_grammar(&g).map_err(|ds| {
        FrontendError::Grammar(ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))
    })?;
    Ok(g)
}

pub fn logic_of(sort: Sort, pos: Pos) -> Result<Logic, FrontendError> {
    match sort {
        Sort::String => Ok(Logic::Strings),
        Sort::BitVec(_) => Ok(Logic::Bitvectors),
        s => malformed(pos, format!("unsupported output sort {s}")),
    }
}

struct SynthFun {
    name: String,
    vars: Vec<(String, Sort)>,
    sort: Sort,
    grammar: Grammar,
    pos: Pos,
}

fn synth_fun(items: &[Sexp], pos: Pos) -> Result<SynthFun, FrontendError> {
    let (name, params, sort, rest) = match items {
        [_, Sexp::Atom(n, _), Sexp::List(ps, _), sort, rest @ ..] => (n, ps, sort, rest),
        _ => return malformed(pos, "expected (synth-fun name ((x Sort) ...) Sort grammar)"),
    };
    let mut vars = Vec::new();
    for p in params {
        let Some([Sexp::Atom(v, _), s]) = p.list() else {
            return malformed(p.pos(), format!("bad parameter {p}"));
        };
        vars.push((v.clone(), parse_sort(s)?));
    }
    let sort = parse_sort(sort)?;
    let grammar = match rest {
        [] => return malformed(pos, format!("synth-fun {name} has no grammar")),
        [Sexp::List(g, gp)] => parse_grammar(g, None, &vars, *gp)?,
        [Sexp::List(d, _), Sexp::List(g, gp)] => parse_grammar(g, Some(d), &vars, *gp)?,
        _ => return malformed(pos, "unexpected trailing items in synth-fun"),
    };
    if grammar.nonterminals[grammar.start].sort != sort {
        return malformed(pos, "start nonterminal sort differs from the function sort");
    }
    Ok(SynthFun { name: name.clone(), vars, sort, grammar, pos })
}

/// `(= (f c ...) c)` in either orientation.
fn example(c: &Sexp, f: &SynthFun) -> Result<(Vec<Value>, Value), FrontendError> {
    let not_example = || FrontendError::NotAnExample { pos: c.pos() };
    let Some([Sexp::Atom(eq, _), a, b]) = c.list() else { return Err(not_example()) };
    if eq != "=" {
        return Err(not_example());
    }
    let is_call = |s: &Sexp| matches!(s.list(), Some([Sexp::Atom(h, _), ..]) if *h == f.name);
    let (call, out) = if is_call(a) {
        (a, b)
    } else if is_call(b) {
        (b, a)
    } else {
        return Err(not_example());
    };
    let lit = |s: &Sexp| -> Result<Value, FrontendError> {
        literal(s)?.ok_or_else(|| FrontendError::NonConstantArgument { arg: s.to_string(), pos: s.pos() })
    };
    let args = call.list().unwrap()[1..].iter().map(lit).collect::<Result<Vec<_>, _>>()?;
    Ok((args, lit(out)?))
}

/// Parse a task in the s-expression format.
pub fn parse_task(text: &str) -> Result<SynthesisTask, FrontendError> {
    let cmds = sexp::parse_all(text)?;
    let mut fun: Option<SynthFun> = None;
    let mut constraints = Vec::new();
    for c in &cmds {
        let Some((Sexp::Atom(head, hp), _)) = c.list().and_then(|l| l.split_first()) else {
            return malformed(c.pos(), format!("expected a command, found {c}"));
        };
        match head.as_str() {
            "set-logic" | "set-option" | "declare-var" | "check-synth" | "set-info" => {}
            "synth-fun" => {
                if fun.is_some() {
                    return malformed(*hp, "only one synth-fun is supported");
                }
                fun = Some(synth_fun(c.list().unwrap(), c.pos())?);
            }
            "constraint" => match c.list().unwrap() {
                [_, body] => constraints.push(body),
                _ => return malformed(c.pos(), "constraint takes one term"),
            },
            other => return malformed(*hp, format!("unsupported command {other}")),
        }
    }
    let Some(f) = fun else { return malformed(Pos { line: 1, col: 1 }, "no synth-fun") };
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for c in constraints {
        let (i, o) = example(c, &f)?;
        inputs.push(i);
        outputs.push(o);
    }
    let logic = logic_of(f.sort, f.pos)?;
    let examples = ExampleSet::new(f.vars, f.sort, inputs, outputs)?;
    Ok(SynthesisTask { fn_name: f.name, logic, grammar: f.grammar, examples })
}

/// Parse a task file by extension: `.json` uses the JSON mirror.
pub fn parse_task_file(path: &std::path::Path) -> Result<SynthesisTask, FrontendError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| FrontendError::Malformed { pos: Pos::default(), message: format!("{}: {e}", path.display()) })?;
    if path.extension().is_some_and(|e| e == "json") {
        json::parse_json_task(&text)
    } else {
        parse_task(&text)
    }
}

/// The solution as a `define-fun`.
pub fn emit_solution(task: &SynthesisTask, p: &Program) -> String {
    let params: Vec<String> = task.examples.vars.iter().map(|(n, s)| format!("({n} {s})")).collect();
    format!("(define-fun {} ({}) {} {p})", task.fn_name, params.join(" "), task.output_sort())
}

/// Render a task back to the s-expression format.
pub fn render_task(task: &SynthesisTask) -> String {
    let g = &task.grammar;
    let ex = &task.examples;
    let mut out = String::new();
    let logic = match task.logic {
        Logic::Strings => "SLIA",
        Logic::Bitvectors => "BV",
    };
    out.push_str(&format!("(set-logic {logic})\n"));
    let params: Vec<String> = ex.vars.iter().map(|(n, s)| format!("({n} {s})")).collect();
    out.push_str(&format!("(synth-fun {} ({}) {}\n  (", task.fn_name, params.join(" "), ex.output_sort));
    let decls: Vec<String> = g.nonterminals.iter().map(|n| format!("({} {})", n.name, n.sort)).collect();
    out.push_str(&decls.join(" "));
    out.push_str(")\n  (");
    for (k, nt) in g.nonterminals.iter().enumerate() {
        let rhs: Vec<String> =
            g.productions.iter().filter(|p| p.lhs == k).map(|p| g.render_rhs(&p.rhs)).collect();
        out.push_str(&format!("\n    ({} {} ({}))", nt.name, nt.sort, rhs.join(" ")));
    }
    out.push_str("))\n");
    for (i, o) in ex.inputs.iter().zip(&ex.outputs) {
        let args: Vec<String> = i.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("(constraint (= ({} {}) {o}))\n", task.fn_name, args.join(" ")));
    }
    out.push_str("(check-synth)\n");
    out
}
