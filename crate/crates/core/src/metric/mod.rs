//! Oriented metrics on values, their lifting to output vectors, balls and refinement.
//!
//! Distances are integers scaled by [`SCALE`] so the size-threshold wrapper can
//! use an exact [`EPSILON`] below any integer radius.

pub mod bitvec;
pub mod levenshtein;
pub mod string;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::semantics::{ExampleSet, OutputVector, Value};

/// Scaled distance. One unit of distance is `SCALE`.
pub type Dist = u64;

pub const SCALE: Dist = 1 << 20;

/// Gap used by the size-threshold wrapper (2^-20 in real terms).
pub const EPSILON: Dist = 1;

pub fn units(n: u64) -> Dist {
    n.saturating_mul(SCALE)
}

/// Membership predicate for a per-value ball, used when a metric has a faster
/// test than computing the distance.
pub type MemberFn = Arc<dyn Fn(&Value) -> bool + Send + Sync>;

/// A distance on values satisfying reflexivity, symmetry at zero and the triangle inequality.
pub trait DataOrimetric: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    /// `m(i, o)`: how far `i` is from the target `o`.
    fn distance(&self, i: &Value, o: &Value) -> Dist;

    /// The constant used for "condition fails" branches; 0 if none.
    fn big_constant(&self) -> Dist {
        0
    }

    /// Largest distance to `o` attainable without the constant branch.
    fn max_distance(&self, o: &Value) -> Dist;

    /// Optional fast test for `distance(i, center) < radius` (or `<=` if closed).
    fn member_fn(&self, _center: &Value, _radius: Dist, _strict: bool) -> Option<MemberFn> {
        None
    }
}

/// How per-example distances combine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Sum,
    /// Largest per-example distance; a ball then bounds every example separately.
    Max,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("example index set is empty")]
    EmptyIndexSet,
    #[error("example index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("program is not spurious: it satisfies every example")]
    NotSpurious,
    #[error("unknown metric {0}")]
    Unknown(String),
}

/// A data orimetric lifted to output vectors over the example indices `j`.
#[derive(Clone, Debug)]
pub struct LiftedOrimetric {
    pub base: Arc<dyn DataOrimetric>,
    j: Vec<usize>,
    pub aggregation: Aggregation,
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricDescriptor {
    pub name: String,
    pub j: Vec<usize>,
    pub c: f64,
    pub aggregation: Aggregation,
}

pub fn lift(base: Arc<dyn DataOrimetric>, j: &[usize]) -> Result<LiftedOrimetric, MetricError> {
    LiftedOrimetric::new(base, j, Aggregation::Sum)
}

impl LiftedOrimetric {
    pub fn new(
        base: Arc<dyn DataOrimetric>,
        j: &[usize],
        aggregation: Aggregation,
    ) -> Result<LiftedOrimetric, MetricError> {
        if j.is_empty() {
            return Err(MetricError::EmptyIndexSet);
        }
        let mut j = j.to_vec();
        j.sort_unstable();
        j.dedup();
        Ok(LiftedOrimetric { base, j, aggregation })
    }

    pub fn indices(&self) -> &[usize] {
        &self.j
    }

    pub fn distance(&self, f: &[Value], g: &[Value]) -> Dist {
        let per = self.j.iter().map(|&k| self.base.distance(&f[k], &g[k]));
        match self.aggregation {
            Aggregation::Sum => per.fold(0, Dist::saturating_add),
            Aggregation::Max => per.max().unwrap_or(0),
        }
    }

    /// Canonical key of the induced equivalence class of `f`.
    pub fn key(&self, f: &[Value]) -> EquivKey {
        EquivKey(self.j.iter().map(|&k| f[k].clone()).collect())
    }

    /// Max distance excluding the constant, aggregated over `j`.
    pub fn max_distance(&self, outputs: &[Value]) -> Dist {
        let per = self.j.iter().map(|&k| self.base.max_distance(&outputs[k]));
        match self.aggregation {
            Aggregation::Sum => per.fold(0, Dist::saturating_add),
            Aggregation::Max => per.max().unwrap_or(0),
        }
    }

    pub fn with_indices(&self, j: &[usize]) -> Result<LiftedOrimetric, MetricError> {
        LiftedOrimetric::new(self.base.clone(), j, self.aggregation)
    }

    pub fn descriptor(&self) -> MetricDescriptor {
        MetricDescriptor {
            name: self.base.name(),
            j: self.j.clone(),
            c: self.base.big_constant() as f64 / SCALE as f64,
            aggregation: self.aggregation,
        }
    }
}

/// Output tuple on the metric's example indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EquivKey(pub Vec<Value>);

/// Add the smallest failing example index outside `J` to the metric.
pub fn refine(
    m: &LiftedOrimetric,
    p_outputs: &[Value],
    examples: &ExampleSet,
) -> Result<LiftedOrimetric, MetricError> {
    let failing: Vec<usize> = (0..examples.len())
        .filter(|&k| p_outputs[k] != examples.outputs[k])
        .collect();
    let k = failing
        .iter()
        .copied()
        .find(|k| !m.j.contains(k))
        .or_else(|| failing.first().copied())
        .ok_or(MetricError::NotSpurious)?;
    let mut j = m.j.clone();
    j.push(k);
    m.with_indices(&j)
}

/// A ball around the ground truth.
#[derive(Clone)]
pub struct Ball {
    pub metric: LiftedOrimetric,
    pub radius: Dist,
    pub strict: bool,
    pub center: OutputVector,
    members: Option<Vec<MemberFn>>,
}

impl fmt::Debug for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ball")
            .field("metric", &self.metric.descriptor())
            .field("radius", &self.radius)
            .field("strict", &self.strict)
            .finish()
    }
}

impl Ball {
    pub fn new(metric: LiftedOrimetric, radius: Dist, strict: bool, center: OutputVector) -> Ball {
        let members = if metric.aggregation == Aggregation::Max {
            metric
                .j
                .iter()
                .map(|&k| metric.base.member_fn(&center[k], radius, strict))
                .collect::<Option<Vec<_>>>()
        } else {
            None
        };
        Ball { metric, radius, strict, center, members }
    }

    /// Whether `f` has the sort of the center. Other sorts are never pruned.
    pub fn applies_to(&self, f: &[Value]) -> bool {
        f.first().map(Value::sort) == self.center.first().map(Value::sort)
    }

    pub fn contains(&self, f: &[Value]) -> bool {
        if let Some(ms) = &self.members {
            return self.metric.j.iter().zip(ms).all(|(&k, m)| m(&f[k]));
        }
        let d = self.metric.distance(f, &self.center);
        if self.strict {
            d < self.radius
        } else {
            d <= self.radius
        }
    }
}

pub fn in_ball(b: &Ball, f: &[Value]) -> bool {
    b.contains(f)
}

/// Keeps programs of size at most `s` inside the open ball of radius `r`.
#[derive(Clone, Debug)]
pub struct SizeThreshold {
    pub metric: LiftedOrimetric,
    pub radius: Dist,
    pub s: usize,
}

pub fn size_threshold_wrap(m: LiftedOrimetric, r: Dist, s: usize) -> SizeThreshold {
    SizeThreshold { metric: m, radius: r, s }
}

impl SizeThreshold {
    /// Wrapped distance of a program with the given size and outputs.
    /// `small_equivalent` says whether an already kept program of size at most
    /// `s` is equivalent to it.
    pub fn distance(&self, size: usize, f: &[Value], g: &[Value], small_equivalent: bool) -> Dist {
        let d = self.metric.distance(f, g);
        if d < self.radius {
            d
        } else if size <= self.s || small_equivalent {
            self.radius.saturating_sub(EPSILON)
        } else {
            self.radius
        }
    }
}

/// Per-output maximum (excluding the constant) summed over `outputs`.
pub fn max_distance(base: &dyn DataOrimetric, outputs: &[Value]) -> Dist {
    outputs.iter().map(|o| base.max_distance(o)).fold(0, Dist::saturating_add)
}

/// An axiom violation found by [`check_axioms`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Reflexivity { a: Value, d: Dist },
    SymmetryAtZero { a: Value, b: Value },
    Triangle { a: Value, b: Value, c: Value },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Reflexivity { a, d } => write!(f, "reflexivity: m({a}, {a}) = {d}"),
            Violation::SymmetryAtZero { a, b } => {
                write!(f, "symmetry at zero: m({b}, {a}) = 0 but m({a}, {b}) > 0")
            }
            Violation::Triangle { a, b, c } => {
                write!(f, "triangle: m({a}, {c}) > m({a}, {b}) + m({b}, {c})")
            }
        }
    }
}

const MAX_REPORTED: usize = 64;

/// Check reflexivity and symmetry at zero on all pairs and the triangle
/// inequality on all triples of `samples`.
pub fn check_axioms(m: &dyn DataOrimetric, samples: &[Value]) -> Vec<Violation> {
    let n = samples.len();
    let mut d = vec![0; n * n];
    for (x, a) in samples.iter().enumerate() {
        for (y, b) in samples.iter().enumerate() {
            d[x * n + y] = m.distance(a, b);
        }
    }
    let mut out = Vec::new();
    for x in 0..n {
        if d[x * n + x] != 0 {
            out.push(Violation::Reflexivity { a: samples[x].clone(), d: d[x * n + x] });
        }
        for y in 0..n {
            if d[y * n + x] == 0 && d[x * n + y] != 0 {
                out.push(Violation::SymmetryAtZero { a: samples[x].clone(), b: samples[y].clone() });
            }
        }
    }
    'outer: for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                if out.len() >= MAX_REPORTED {
                    break 'outer;
                }
                if d[x * n + z] > d[x * n + y].saturating_add(d[y * n + z]) {
                    out.push(Violation::Triangle {
                        a: samples[x].clone(),
                        b: samples[y].clone(),
                        c: samples[z].clone(),
                    });
                }
            }
        }
    }
    out
}

/// Axiom check over explicit triples; each triple also contributes its pairs.
pub fn check_axioms_triples<'a>(
    m: &dyn DataOrimetric,
    triples: impl IntoIterator<Item = (&'a Value, &'a Value, &'a Value)>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    for (a, b, c) in triples {
        if out.len() >= MAX_REPORTED {
            break;
        }
        let da = m.distance(a, a);
        if da != 0 {
            out.push(Violation::Reflexivity { a: a.clone(), d: da });
        }
        if m.distance(b, a) == 0 && m.distance(a, b) != 0 {
            out.push(Violation::SymmetryAtZero { a: a.clone(), b: b.clone() });
        }
        if m.distance(a, c) > m.distance(a, b).saturating_add(m.distance(b, c)) {
            out.push(Violation::Triangle { a: a.clone(), b: b.clone(), c: c.clone() });
        }
    }
    out
}

/// Shipped data metrics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Overview,
    Concat,
    Substr,
    Lvst,
    And,
    Or,
    Mul,
    Hd,
}

impl MetricKind {
    pub const STRING: [MetricKind; 4] =
        [MetricKind::Overview, MetricKind::Concat, MetricKind::Substr, MetricKind::Lvst];
    pub const BITVEC: [MetricKind; 4] =
        [MetricKind::And, MetricKind::Or, MetricKind::Mul, MetricKind::Hd];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Overview => "overview",
            MetricKind::Concat => "concat",
            MetricKind::Substr => "substr",
            MetricKind::Lvst => "lvst",
            MetricKind::And => "and",
            MetricKind::Or => "or",
            MetricKind::Mul => "mul",
            MetricKind::Hd => "hd",
        }
    }

    pub fn from_name(s: &str) -> Result<MetricKind, MetricError> {
        MetricKind::STRING
            .iter()
            .chain(MetricKind::BITVEC.iter())
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| MetricError::Unknown(s.to_string()))
    }

    pub fn is_string(self) -> bool {
        MetricKind::STRING.contains(&self)
    }

    /// Whether per-example (max) aggregation is used.
    pub fn aggregation(self) -> Aggregation {
        match self {
            MetricKind::Overview | MetricKind::Lvst | MetricKind::Substr => Aggregation::Max,
            _ => Aggregation::Sum,
        }
    }

    /// The data metric with its constant derived from the task outputs.
    pub fn instantiate(self, outputs: &[Value]) -> Arc<dyn DataOrimetric> {
        let c = task_constant(outputs);
        match self {
            MetricKind::Overview => Arc::new(string::Overview),
            MetricKind::Concat => Arc::new(string::Concat { c }),
            MetricKind::Substr => Arc::new(string::Substr { c }),
            MetricKind::Lvst => Arc::new(string::Lvst),
            MetricKind::And => Arc::new(bitvec::And { c }),
            MetricKind::Or => Arc::new(bitvec::Or { c }),
            MetricKind::Mul => Arc::new(bitvec::Mul { c }),
            MetricKind::Hd => Arc::new(bitvec::Hd),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Discrete metric: 0 on equal values, 1 otherwise. Used for plain
/// observational equivalence.
#[derive(Clone, Copy, Debug)]
pub struct Exact;

impl DataOrimetric for Exact {
    fn name(&self) -> String {
        "exact".into()
    }

    fn distance(&self, i: &Value, o: &Value) -> Dist {
        if i == o {
            0
        } else {
            SCALE
        }
    }

    fn max_distance(&self, _o: &Value) -> Dist {
        SCALE
    }
}

/// `1 + Σ|o|` for strings, `1 + Σ(w + 1)` for bitvectors, in whole units.
pub fn task_constant(outputs: &[Value]) -> u64 {
    1 + outputs
        .iter()
        .map(|o| match o {
            Value::Str(s) => s.len() as u64,
            Value::Bv(b) => b.width() as u64 + 1,
            _ => 0,
        })
        .sum::<u64>()
}
