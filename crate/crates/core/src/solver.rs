//! The refinement loop: enumerate under an approximate metric, verify the
//! first candidate, then refine the metric and promote useful subprograms.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{Receiver, Sender};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::ast::Program;
use crate::deduce::{Deducer, SketchKind};
use crate::enumerate::{
    CostModel, EnumError, Enumerator, FlatGrammar, InsertOutcome, LevelStats, Pruning, ProgramBank,
    Step,
};
use crate::metric::{
    refine, units, Aggregation, Ball, DataOrimetric, Dist, Exact, LiftedOrimetric, MetricError,
    MetricKind, SCALE,
};
use crate::semantics::{output_vector, satisfies, OutputVector, Value};
use crate::task::{Logic, SynthesisTask};

/// How the ball radius is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RadiusPolicy {
    /// Per-mille of the metric's maximum distance (625 = 62.5%).
    Percent(u32),
    /// A fixed open radius.
    Absolute(Dist),
    /// Just below the metric's constant: prune exactly when its condition fails.
    Discrete,
    /// No pruning.
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// `None` runs the non-pruning instance with plain observational equivalence on all examples.
    pub metric: Option<MetricKind>,
    pub radius: RadiusPolicy,
    pub size_threshold: usize,
    pub initial_j: usize,
    pub learn: bool,
    pub deduce: bool,
    /// Sketches to deduce; `None` means all sketches of the task's domain.
    pub sketches: Option<Vec<SketchKind>>,
    pub factorize: bool,
    /// Act on a candidate only after its whole cost level is enumerated.
    pub finish_level: bool,
    /// Hold deduced solutions until the end of the level.
    pub deduce_at_level_end: bool,
    pub max_cost: Option<u32>,
    pub timeout: Option<Duration>,
    pub seed: u64,
}

impl SolverConfig {
    /// Defaults for a metric on a task of the given logic.
    pub fn new(logic: Logic, metric: Option<MetricKind>) -> SolverConfig {
        let radius = match metric {
            None => RadiusPolicy::Unbounded,
            Some(MetricKind::Overview) => RadiusPolicy::Percent(1000),
            Some(MetricKind::Lvst) | Some(MetricKind::Hd) => RadiusPolicy::Percent(750),
            Some(_) => RadiusPolicy::Discrete,
        };
        let (s, j) = match logic {
            Logic::Strings => (3, 1),
            Logic::Bitvectors => (7, 2),
        };
        SolverConfig {
            metric,
            radius,
            size_threshold: s,
            initial_j: j,
            learn: true,
            deduce: true,
            sketches: None,
            factorize: true,
            finish_level: true,
            deduce_at_level_end: false,
            max_cost: None,
            timeout: None,
            seed: 0,
        }
    }

    /// The instance without pruning, factorizing by outputs on all examples.
    pub fn infinity(logic: Logic) -> SolverConfig {
        SolverConfig::new(logic, None)
    }

    /// The worked-example setup: superstring ball of radius 100 checked per
    /// example, leaves exempt, one initial example, no deduction.
    pub fn overview_demo() -> SolverConfig {
        SolverConfig {
            size_threshold: 1,
            deduce: false,
            ..SolverConfig::new(Logic::Strings, Some(MetricKind::Overview))
        }
    }

    pub fn label(&self) -> String {
        self.metric.map(|m| m.name().to_string()).unwrap_or_else(|| "inf".into())
    }

    fn sketch_kinds(&self, logic: Logic) -> Vec<SketchKind> {
        self.sketches.clone().unwrap_or_else(|| match logic {
            Logic::Strings => SketchKind::STRING.to_vec(),
            Logic::Bitvectors => SketchKind::BITVEC.to_vec(),
        })
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Grammar(#[from] EnumError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("metric {metric} does not apply to {logic:?} tasks")]
    WrongDomain { metric: MetricKind, logic: Logic },
    #[error("no solver configurations given")]
    NoConfigs,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Solved(Program),
    Timeout,
    Exhausted,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct IterationStats {
    pub j: Vec<usize>,
    pub radius: Option<f64>,
    /// Counters per cost, index 0 is cost 1.
    pub levels: Vec<LevelStats>,
    pub candidate: Option<String>,
    /// The iteration was abandoned to adopt programs learned by another instance.
    pub restarted: bool,
}

impl IterationStats {
    pub fn kept_per_level(&self) -> Vec<u64> {
        self.levels.iter().map(|l| l.kept).collect()
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct InstanceStats {
    pub metric: String,
    pub radius: Option<f64>,
    pub iterations: u32,
    pub enumerated: u64,
    pub kept: u64,
    pub pruned_ball: u64,
    pub pruned_equiv: u64,
    pub deduction_hits: u64,
    pub candidates: Vec<String>,
    pub solved: bool,
    pub wall_ms: u64,
    pub solution_size: Option<usize>,
    pub solution: Option<String>,
    pub per_iteration: Vec<IterationStats>,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub outcome: Outcome,
    pub winner: Option<String>,
    pub stats: Vec<InstanceStats>,
}

impl SolveResult {
    pub fn solution(&self) -> Option<&Program> {
        match &self.outcome {
            Outcome::Solved(p) => Some(p),
            _ => None,
        }
    }
}

/// Candidate subprograms shared between portfolio instances.
#[derive(Clone, Debug)]
pub struct Shared {
    pub sender: usize,
    pub subprograms: Vec<(Program, OutputVector)>,
    pub promoted: Vec<Program>,
}

/// An instance's connection to the rest of a portfolio.
pub struct Link {
    pub id: usize,
    pub stop: Arc<AtomicBool>,
    pub inbox: Receiver<Shared>,
    pub peers: Vec<Sender<Shared>>,
}

pub fn verify(p: &Program, task: &SynthesisTask) -> bool {
    satisfies(p, &task.examples)
}

/// A candidate seen in two different iterations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("candidate {program} appears in iterations {first} and {second}")]
pub struct ProgressViolation {
    pub program: String,
    pub first: usize,
    pub second: usize,
}

/// Check that no candidate repeats across iterations.
pub fn progress_check(history: &[Vec<Program>]) -> Result<(), ProgressViolation> {
    let mut seen: std::collections::HashMap<&Program, usize> = Default::default();
    for (it, cands) in history.iter().enumerate() {
        for p in cands {
            if let Some(&first) = seen.get(p) {
                if first != it {
                    return Err(ProgressViolation { program: p.to_string(), first, second: it });
                }
            }
            seen.entry(p).or_insert(it);
        }
    }
    Ok(())
}

fn real(d: Dist) -> f64 {
    d as f64 / SCALE as f64
}

/// The ball for a metric under a radius policy, or `None` when nothing is pruned.
pub fn resolve_ball(
    kind: Option<MetricKind>,
    policy: RadiusPolicy,
    m: &LiftedOrimetric,
    gt: &[Value],
) -> Option<Ball> {
    let kind = kind?;
    let scale = |d: Dist, pm: u32| (d as u128 * pm as u128 / 1000) as Dist;
    let percent = |pm: u32| match kind {
        MetricKind::Substr => Ball::new(m.clone(), m.base.big_constant(), true, gt.to_vec()),
        MetricKind::Lvst => Ball::new(m.clone(), scale(units(4), pm), true, gt.to_vec()),
        MetricKind::Overview => Ball::new(m.clone(), scale(units(100), pm), true, gt.to_vec()),
        _ => Ball::new(m.clone(), scale(m.max_distance(gt), pm), false, gt.to_vec()),
    };
    match policy {
        RadiusPolicy::Unbounded => None,
        RadiusPolicy::Absolute(r) => Some(Ball::new(m.clone(), r, true, gt.to_vec())),
        RadiusPolicy::Percent(pm) => Some(percent(pm)),
        RadiusPolicy::Discrete => {
            let c = m.base.big_constant();
            if c == 0 {
                Some(percent(1000))
            } else {
                Some(Ball::new(m.clone(), c, true, gt.to_vec()))
            }
        }
    }
}

enum End {
    Level,
    Exhausted,
    Restart,
    Stopped,
}

struct Instance<'a> {
    task: &'a SynthesisTask,
    flat: &'a FlatGrammar,
    config: &'a SolverConfig,
    base: Arc<dyn DataOrimetric>,
    aggregation: Aggregation,
    gt: &'a [Value],
    precise: Option<Ball>,
    deadline: Option<Instant>,
    link: Option<&'a Link>,
    model: CostModel,
    stats: InstanceStats,
    history: Vec<Vec<Program>>,
}

impl<'a> Instance<'a> {
    fn new(
        task: &'a SynthesisTask,
        flat: &'a FlatGrammar,
        config: &'a SolverConfig,
        link: Option<&'a Link>,
    ) -> Result<Instance<'a>, SolveError> {
        let gt = &task.examples.outputs[..];
        if let Some(k) = config.metric {
            if k.is_string() != (task.logic == Logic::Strings) {
                return Err(SolveError::WrongDomain { metric: k, logic: task.logic });
            }
        }
        let (base, aggregation): (Arc<dyn DataOrimetric>, _) = match config.metric {
            Some(k) => (k.instantiate(gt), k.aggregation()),
            None => (Arc::new(Exact), Aggregation::Sum),
        };
        let all: Vec<usize> = (0..gt.len()).collect();
        let precise_m = LiftedOrimetric::new(base.clone(), &all, aggregation)?;
        let precise = resolve_ball(config.metric, config.radius, &precise_m, gt);
        Ok(Instance {
            task,
            flat,
            config,
            base,
            aggregation,
            gt,
            precise,
            deadline: config.timeout.map(|t| Instant::now() + t),
            link,
            model: CostModel::new(),
            stats: InstanceStats { metric: config.label(), ..Default::default() },
            history: Vec::new(),
        })
    }

    fn should_stop(&self) -> bool {
        self.link.is_some_and(|l| l.stop.load(Ordering::Relaxed))
            || self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Adopt programs other instances learned; true if the order changed.
    fn receive(&mut self) -> bool {
        let Some(link) = self.link else { return false };
        let mut changed = false;
        while let Ok(msg) = link.inbox.try_recv() {
            if self.config.metric.is_none() {
                for p in msg.promoted {
                    changed |= self.model.promote(p);
                }
            } else if self.config.learn {
                for (q, out) in msg.subprograms {
                    let inside = self.precise.as_ref().is_none_or(|b| b.applies_to(&out) && b.contains(&out));
                    if q.size() > 1 && inside {
                        changed |= self.model.promote(q);
                    }
                }
            }
        }
        changed
    }

    fn learn(&mut self, cand: &Program) -> Vec<(Program, OutputVector)> {
        let mut subs = Vec::new();
        for q in cand.subprograms() {
            if q.size() <= 1 {
                continue;
            }
            let Ok(out) = output_vector(&q, &self.task.examples) else { continue };
            let inside = self.precise.as_ref().is_none_or(|b| b.applies_to(&out) && b.contains(&out));
            if self.config.learn && inside && q.sort() == self.task.output_sort() {
                self.model.promote(q.clone());
            }
            subs.push((q, out));
        }
        subs
    }

    fn run(mut self) -> (Outcome, InstanceStats, Vec<Vec<Program>>) {
        let start = Instant::now();
        let outcome = self.iterate();
        let st = &mut self.stats;
        st.wall_ms = start.elapsed().as_millis() as u64;
        for it in &st.per_iteration {
            for l in &it.levels {
                st.enumerated += l.enumerated;
                st.kept += l.kept;
                st.pruned_ball += l.pruned_ball;
                st.pruned_equiv += l.pruned_equiv;
            }
        }
        if let Outcome::Solved(p) = &outcome {
            st.solved = true;
            st.solution_size = Some(p.size());
            st.solution = Some(p.to_string());
        }
        (outcome, self.stats, self.history)
    }

    fn iterate(&mut self) -> Outcome {
        let n = self.gt.len();
        let mut j: Vec<usize> = if self.config.metric.is_none() {
            (0..n).collect()
        } else {
            (0..self.config.initial_j.clamp(1, n)).collect()
        };
        let kinds = self.config.sketch_kinds(self.task.logic);
        let start: crate::enumerate::NtSet = 1 << self.task.grammar.start;
        loop {
            let m_sharp = LiftedOrimetric::new(self.base.clone(), &j, self.aggregation)
                .expect("nonempty example set");
            let ball = resolve_ball(self.config.metric, self.config.radius, &m_sharp, self.gt);
            let mut it_stats = IterationStats {
                j: j.clone(),
                radius: ball.as_ref().map(|b| real(b.radius)),
                ..Default::default()
            };
            if self.stats.per_iteration.is_empty() {
                self.stats.radius = it_stats.radius;
            }
            let pruning = Pruning {
                ball,
                size_threshold: self.config.size_threshold,
                equivalence: self.config.factorize.then(|| m_sharp.clone()),
            };
            let mut bank = ProgramBank::new(self.flat.nonterminals.len());
            let mut en = Enumerator::new(self.flat, &self.task.examples, self.model.clone());
            let mut deducer = self.config.deduce.then(|| Deducer::new(&kinds, self.flat, self.gt));
            let mut candidate: Option<usize> = None;
            let mut deduced: Option<Program> = None;
            let mut steps = 0u64;
            let end = loop {
                steps += 1;
                if steps.is_multiple_of(256) && self.should_stop() {
                    break End::Stopped;
                }
                match en.next_step(&bank) {
                    Step::Candidate(c) => {
                        let InsertOutcome::Kept(id) = bank.try_insert(c, &pruning) else { continue };
                        let e = bank.entry(id);
                        if candidate.is_none() && e.nts & start != 0 && m_sharp.distance(&e.outputs, self.gt) == 0 {
                            candidate = Some(id);
                            if !self.config.finish_level {
                                break End::Level;
                            }
                        }
                        if let (Some(d), None) = (deducer.as_mut(), &deduced) {
                            let found = d.deduce(&bank, self.flat, &self.task.examples, id, 1);
                            if let Some(p) = found.into_iter().next() {
                                deduced = Some(p);
                                if !self.config.deduce_at_level_end {
                                    break End::Level;
                                }
                            }
                        }
                    }
                    Step::LevelEnd(c) => {
                        if candidate.is_some() || deduced.is_some() {
                            break End::Level;
                        }
                        if self.config.max_cost.is_some_and(|m| c >= m) {
                            break End::Exhausted;
                        }
                        if self.should_stop() {
                            break End::Stopped;
                        }
                        if self.receive() {
                            break End::Restart;
                        }
                    }
                    Step::Exhausted => break End::Exhausted,
                }
            };
            it_stats.levels = bank.levels().iter().skip(1).copied().collect();
            self.stats.deduction_hits += deducer.as_ref().map_or(0, |d| d.hits);

            if let End::Restart = end {
                it_stats.restarted = true;
                self.stats.per_iteration.push(it_stats);
                continue;
            }
            self.stats.iterations += 1;
            let cand = candidate.map(|id| bank.entry(id).program.clone());
            if let Some(p) = &cand {
                it_stats.candidate = Some(p.to_string());
                self.stats.candidates.push(p.to_string());
                self.history.push(vec![p.clone()]);
            } else {
                self.history.push(Vec::new());
            }
            self.stats.per_iteration.push(it_stats);
            if let End::Stopped = end {
                return Outcome::Timeout;
            }
            if let Some(p) = &cand {
                if verify(p, self.task) {
                    return Outcome::Solved(p.clone());
                }
            }
            if let Some(p) = deduced {
                if verify(&p, self.task) {
                    return Outcome::Solved(p);
                }
            }
            let Some(p) = cand else { return Outcome::Exhausted };
            let outs = output_vector(&p, &self.task.examples).expect("kept program evaluates");
            let refined = match refine(&m_sharp, &outs, &self.task.examples) {
                Ok(r) => r,
                Err(_) => return Outcome::Exhausted,
            };
            if refined.indices().len() == j.len() {
                return Outcome::Exhausted;
            }
            j = refined.indices().to_vec();
            let subs = self.learn(&p);
            if let Some(link) = self.link {
                let msg = Shared { sender: link.id, subprograms: subs, promoted: self.model.learned().to_vec() };
                for peer in &link.peers {
                    let _ = peer.send(msg.clone());
                }
            }
        }
    }
}

/// Run one solver instance.
pub fn solve_instance(task: &SynthesisTask, config: &SolverConfig) -> Result<SolveResult, SolveError> {
    let flat = FlatGrammar::new(&task.grammar)?;
    let (outcome, stats, _) = Instance::new(task, &flat, config, None)?.run();
    let winner = matches!(outcome, Outcome::Solved(_)).then(|| config.label());
    Ok(SolveResult { outcome, winner, stats: vec![stats] })
}

/// Run one instance and also return the candidates of every iteration.
pub fn solve_with_history(
    task: &SynthesisTask,
    config: &SolverConfig,
) -> Result<(SolveResult, Vec<Vec<Program>>), SolveError> {
    let flat = FlatGrammar::new(&task.grammar)?;
    let (outcome, stats, history) = Instance::new(task, &flat, config, None)?.run();
    let winner = matches!(outcome, Outcome::Solved(_)).then(|| config.label());
    Ok((SolveResult { outcome, winner, stats: vec![stats] }, history))
}

/// Default portfolio for a task: every metric of its domain plus the non-pruning instance.
pub fn default_portfolio(logic: Logic) -> Vec<SolverConfig> {
    let metrics: &[MetricKind] = match logic {
        Logic::Strings => &[MetricKind::Concat, MetricKind::Substr, MetricKind::Lvst],
        Logic::Bitvectors => &[MetricKind::And, MetricKind::Or, MetricKind::Mul, MetricKind::Hd],
    };
    let mut out: Vec<SolverConfig> =
        metrics.iter().map(|&m| specialize(SolverConfig::new(logic, Some(m)), logic)).collect();
    out.push(specialize(SolverConfig::infinity(logic), logic));
    out
}

/// Restrict deduction to the metric's own sketch; the remaining instances
/// take the sketches no metric is designed for.
pub fn specialize(mut c: SolverConfig, logic: Logic) -> SolverConfig {
    let own = match c.metric {
        Some(MetricKind::Concat) => Some(vec![SketchKind::StrConcat]),
        Some(MetricKind::Substr) => Some(vec![SketchKind::StrSubstr]),
        Some(MetricKind::And) => Some(vec![SketchKind::And]),
        Some(MetricKind::Or) => Some(vec![SketchKind::Or]),
        Some(MetricKind::Mul) => Some(vec![SketchKind::Mul]),
        _ => None,
    };
    c.sketches = Some(own.unwrap_or_else(|| match logic {
        Logic::Strings => vec![SketchKind::StrReplace],
        Logic::Bitvectors => vec![
            SketchKind::Add,
            SketchKind::Xor,
            SketchKind::NotAdd,
            SketchKind::NegAdd,
            SketchKind::NotXor,
            SketchKind::NegXor,
        ],
    }));
    c
}

/// Run instances concurrently; the first verified solution wins and the
/// others are cancelled.
pub fn solve_portfolio(task: &SynthesisTask, configs: &[SolverConfig]) -> Result<SolveResult, SolveError> {
    if configs.is_empty() {
        return Err(SolveError::NoConfigs);
    }
    let flat = FlatGrammar::new(&task.grammar)?;
    let stop = Arc::new(AtomicBool::new(false));
    let channels: Vec<(Sender<Shared>, Receiver<Shared>)> =
        configs.iter().map(|_| std::sync::mpsc::channel()).collect();
    let senders: Vec<Sender<Shared>> = channels.iter().map(|(s, _)| s.clone()).collect();
    let mut links = Vec::new();
    for (id, (_, rx)) in channels.into_iter().enumerate() {
        links.push(Link {
            id,
            stop: stop.clone(),
            inbox: rx,
            peers: senders.iter().enumerate().filter(|(k, _)| *k != id).map(|(_, s)| s.clone()).collect(),
        });
    }
    drop(senders);
    // validate before spawning
    for c in configs {
        Instance::new(task, &flat, c, None)?;
    }
    let winner: std::sync::Mutex<Option<(usize, Program)>> = std::sync::Mutex::new(None);
    let mut stats: Vec<InstanceStats> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .zip(links)
            .map(|(c, link)| {
                let flat = &flat;
                let winner = &winner;
                let stop = stop.clone();
                scope.spawn(move || {
                    let inst = Instance::new(task, flat, c, Some(&link)).expect("validated");
                    let (outcome, st, _) = inst.run();
                    if let Outcome::Solved(p) = outcome {
                        let mut w = winner.lock().unwrap();
                        if w.is_none() {
                            *w = Some((link.id, p));
                        }
                        stop.store(true, Ordering::Relaxed);
                    }
                    st
                })
            })
            .collect();
        for h in handles {
            stats.push(h.join().expect("solver thread panicked"));
        }
    });
    let winner = winner.into_inner().unwrap();
    let outcome = match &winner {
        Some((_, p)) => Outcome::Solved(p.clone()),
        None if stats.iter().all(|s| !s.solved) && configs.iter().all(|c| c.timeout.is_none()) => {
            Outcome::Exhausted
        }
        None => {
            let timed_out = configs
                .iter()
                .zip(&stats)
                .any(|(c, s)| c.timeout.is_some_and(|t| s.wall_ms as u128 >= t.as_millis()));
            if timed_out {
                Outcome::Timeout
            } else {
                Outcome::Exhausted
            }
        }
    };
    Ok(SolveResult { outcome, winner: winner.map(|(id, _)| configs[id].label()), stats })
}

/// Environment variable capping the number of portfolio threads.
pub const THREADS_VAR: &str = "MERLIN_THREADS";

/// Keep at most `n` instances; the non-pruning instance always stays.
pub fn cap_portfolio(mut configs: Vec<SolverConfig>, n: usize) -> Vec<SolverConfig> {
    let n = n.max(1);
    if configs.len() <= n {
        return configs;
    }
    let inf = configs.iter().position(|c| c.metric.is_none());
    let keep_inf = inf.map(|i| configs.remove(i));
    configs.truncate(n - usize::from(keep_inf.is_some()));
    configs.extend(keep_inf);
    configs
}

/// Apply the thread cap from the environment, if set.
pub fn cap_from_env(configs: Vec<SolverConfig>) -> Vec<SolverConfig> {
    match std::env::var(THREADS_VAR).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(n) => cap_portfolio(configs, n),
        None => configs,
    }
}
