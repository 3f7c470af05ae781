//! JSON mirror of the task format, convenient for generated tests.
//!
//! ```json
//! {"logic": "bitvectors", "width": 8,
//!  "grammar": [{"lhs": "S", "rhs": ["x", "#x01", "(bvadd S S)"]}],
//!  "examples": [[["#x03"], "#x04"]]}
//! ```
//!
//! Right-hand sides are s-expressions. Example values in a string slot are
//! taken verbatim; elsewhere they are literals, or JSON numbers and booleans.

use serde::{Deserialize, Serialize};

use super::{literal, parse_grammar, parse_sort, sexp, FrontendError, Pos, Sexp};
use crate::ast::Sort;
use crate::semantics::{ExampleSet, Value};
use crate::task::{Logic, SynthesisTask};

#[derive(Debug, Serialize, Deserialize)]
pub struct JsonProduction {
    pub lhs: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sort: Option<String>,
    pub rhs: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JsonTask {
    pub logic: Logic,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<u32>,
    #[serde(default = "default_name")]
    pub function: String,
    /// Parameter names and sorts; defaults to a single `x` of the output sort.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<(String, String)>>,
    pub grammar: Vec<JsonProduction>,
    pub examples: Vec<(Vec<serde_json::Value>, serde_json::Value)>,
}

fn default_name() -> String {
    "f".into()
}

fn err(m: impl std::fmt::Display) -> FrontendError {
    FrontendError::Json(m.to_string())
}

fn sort_of(text: &str) -> Result<Sort, FrontendError> {
    parse_sort(&sexp::parse_one(text)?)
}

fn value(v: &serde_json::Value, sort: Sort) -> Result<Value, FrontendError> {
    use serde_json::Value as J;
    let got = match (v, sort) {
        (J::String(s), Sort::String) => return Ok(Value::str(s)),
        (J::String(s), _) => literal(&sexp::parse_one(s)?)?.ok_or_else(|| err(format!("{s} is not a literal")))?,
        (J::Number(n), Sort::BitVec(w)) => Value::bv(w, n.as_u64().ok_or_else(|| err(format!("bad bitvector {n}")))?),
        (J::Number(n), _) => Value::Int(n.as_i64().ok_or_else(|| err(format!("bad integer {n}")))?),
        (J::Bool(b), _) => Value::Bool(*b),
        _ => return Err(err(format!("unsupported example value {v}"))),
    };
    if got.sort() != sort {
        return Err(err(format!("{v} does not have sort {sort}")));
    }
    Ok(got)
}

pub fn parse_json_task(text: &str) -> Result<SynthesisTask, FrontendError> {
    let j: JsonTask = serde_json::from_str(text).map_err(err)?;
    let out_sort = match j.logic {
        Logic::Strings => Sort::String,
        Logic::Bitvectors => Sort::BitVec(j.width.unwrap_or(64)),
    };
    if let Sort::BitVec(w) = out_sort {
        if !(1..=64).contains(&w) {
            return Err(err(format!("width {w} outside 1..=64")));
        }
    }
    let vars: Vec<(String, Sort)> = match &j.params {
        Some(ps) => ps.iter().map(|(n, s)| Ok((n.clone(), sort_of(s)?))).collect::<Result<_, FrontendError>>()?,
        None => vec![("x".into(), out_sort)],
    };
    // Rebuild the grammar block as s-expressions and share the s-expression path.
    let pos = Pos::default();
    let mut order: Vec<(String, String)> = Vec::new();
    let mut rules: Vec<Vec<Sexp>> = Vec::new();
    for p in &j.grammar {
        let sort = p.sort.clone().unwrap_or_else(|| out_sort.to_string());
        let k = match order.iter().position(|(n, _)| *n == p.lhs) {
            Some(k) => k,
            None => {
                order.push((p.lhs.clone(), sort.clone()));
                rules.push(Vec::new());
                order.len() - 1
            }
        };
        if order[k].1 != sort {
            return Err(err(format!("nonterminal {} given two sorts", p.lhs)));
        }
        for r in &p.rhs {
            rules[k].push(sexp::parse_one(r)?);
        }
    }
    let entries = order
        .iter()
        .zip(rules)
        .map(|((n, s), rs)| {
            Ok(Sexp::List(vec![Sexp::Atom(n.clone(), pos), sexp::parse_one(s)?, Sexp::List(rs, pos)], pos))
        })
        .collect::<Result<Vec<_>, FrontendError>>()?;
    let grammar = parse_grammar(&entries, None, &vars, pos)?;
    if grammar.nonterminals[grammar.start].sort != out_sort {
        return Err(err("start nonterminal sort differs from the output sort"));
    }
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for (args, out) in &j.examples {
        if args.len() != vars.len() {
            return Err(err(format!("example has {} arguments, expected {}", args.len(), vars.len())));
        }
        inputs.push(args.iter().zip(&vars).map(|(a, (_, s))| value(a, *s)).collect::<Result<Vec<_>, _>>()?);
        outputs.push(value(out, out_sort)?);
    }
    let examples = ExampleSet::new(vars, out_sort, inputs, outputs)?;
    Ok(SynthesisTask { fn_name: j.function, logic: j.logic, grammar, examples })
}

fn json_value(v: &Value) -> serde_json::Value {
    match v {
        Value::Str(s) => serde_json::Value::String(s.to_string()),
        Value::Int(i) => (*i).into(),
        Value::Bool(b) => (*b).into(),
        Value::Bv(_) => serde_json::Value::String(v.to_string()),
    }
}

/// The JSON mirror of a task.
pub fn to_json(task: &SynthesisTask) -> String {
    let g = &task.grammar;
    let grammar = g
        .nonterminals
        .iter()
        .enumerate()
        .map(|(k, nt)| JsonProduction {
            lhs: nt.name.clone(),
            sort: Some(nt.sort.to_string()),
            rhs: g.productions.iter().filter(|p| p.lhs == k).map(|p| g.render_rhs(&p.rhs)).collect(),
        })
        .collect();
    let ex = &task.examples;
    let j = JsonTask {
        logic: task.logic,
        width: task.width(),
        function: task.fn_name.clone(),
        params: Some(ex.vars.iter().map(|(n, s)| (n.clone(), s.to_string())).collect()),
        grammar,
        examples: ex
            .inputs
            .iter()
            .zip(&ex.outputs)
            .map(|(i, o)| (i.iter().map(json_value).collect(), json_value(o)))
            .collect(),
    };
    serde_json::to_string_pretty(&j).expect("serializable")
}
