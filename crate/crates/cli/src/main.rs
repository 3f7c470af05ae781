//! Command-line front end: solve task files and spot-check metric axioms.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use orisynth::frontend::{emit_solution, parse_task_file};
use orisynth::metric::{check_axioms, MetricKind};
use orisynth::solver::{
    cap_from_env, default_portfolio, solve_instance, solve_portfolio, specialize, Outcome, RadiusPolicy,
    SolveResult, SolverConfig,
};
use orisynth::task::{Logic, SynthesisTask};

#[derive(Parser)]
#[command(name = "orisynth", version, about = "Example-based program synthesis with metric pruning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a function for a task file (.sl, or .json for the JSON mirror).
    Solve(SolveArgs),
    /// Check a metric's axioms on random samples.
    CheckMetric(CheckArgs),
}

#[derive(Args)]
struct SolveArgs {
    task: PathBuf,
    /// Comma-separated metric names; `inf` is the non-pruning instance.
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
    /// Ball radius as a percentage of each metric's maximum distance.
    #[arg(long, conflicts_with = "no_prune")]
    radius_percent: Option<u32>,
    /// Plain enumeration with observational equivalence only.
    #[arg(long)]
    no_prune: bool,
    #[arg(long)]
    size_threshold: Option<usize>,
    #[arg(long)]
    no_learn: bool,
    #[arg(long)]
    no_deduce: bool,
    /// Run only the first configured metric, on this thread.
    #[arg(long)]
    single_instance: bool,
    /// Timeout in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Write statistics as JSON to this file.
    #[arg(long)]
    stats: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CheckArgs {
    name: String,
    /// Number of sampled values; every ordered triple is checked.
    #[arg(long, default_value_t = 48)]
    samples: usize,
    /// Bitvector width.
    #[arg(long, default_value_t = 8)]
    width: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_metric(name: &str) -> Result<Option<MetricKind>, String> {
    match name {
        "inf" | "none" => Ok(None),
        _ => MetricKind::from_name(name).map(Some).map_err(|e| e.to_string()),
    }
}

fn configs(a: &SolveArgs, logic: Logic) -> Result<Vec<SolverConfig>, String> {
    let mut out = if a.no_prune {
        // the baseline: no ball, no deduction
        vec![SolverConfig { deduce: false, ..SolverConfig::infinity(logic) }]
    } else if let Some(names) = &a.metrics {
        let mut v = Vec::new();
        for n in names {
            let m = parse_metric(n.trim())?;
            if let Some(k) = m {
                if k.is_string() != (logic == Logic::Strings) {
                    return Err(format!("metric {k} does not apply to {logic:?} tasks"));
                }
            }
            v.push(match m {
                Some(MetricKind::Overview) => SolverConfig::overview_demo(),
                _ => specialize(SolverConfig::new(logic, m), logic),
            });
        }
        if v.is_empty() {
            return Err("empty metric list".into());
        }
        v
    } else {
        default_portfolio(logic)
    };
    if a.single_instance {
        out.truncate(1);
        if out[0].metric != Some(MetricKind::Overview) {
            out[0].sketches = None;
        }
    } else {
        out = cap_from_env(out);
    }
    for c in &mut out {
        if let (Some(p), Some(_)) = (a.radius_percent, c.metric) {
            c.radius = RadiusPolicy::Percent(p.saturating_mul(10));
        }
        if let Some(s) = a.size_threshold {
            c.size_threshold = s;
        }
        c.learn &= !a.no_learn;
        c.deduce &= !a.no_deduce;
        c.timeout = a.timeout.map(Duration::from_secs_f64);
        c.seed = a.seed;
    }
    Ok(out)
}

fn stats_json(a: &SolveArgs, task: &SynthesisTask, r: &SolveResult) -> serde_json::Value {
    let outcome = match r.outcome {
        Outcome::Solved(_) => "solved",
        Outcome::Timeout => "timeout",
        Outcome::Exhausted => "exhausted",
    };
    serde_json::json!({
        "task": a.task.display().to_string(),
        "outcome": outcome,
        "solution": r.solution().map(|p| emit_solution(task, p)),
        "winner": r.winner,
        "programs": r.stats.iter().map(|s| s.kept).sum::<u64>(),
        "instances": r.stats,
    })
}

fn solve(a: SolveArgs) -> ExitCode {
    let task = match parse_task_file(&a.task) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", a.task.display());
            return ExitCode::from(2);
        }
    };
    let cfgs = match configs(&a, task.logic) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = if cfgs.len() == 1 { solve_instance(&task, &cfgs[0]) } else { solve_portfolio(&task, &cfgs) };
    let r = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(path) = &a.stats {
        let text = format!("{}\n", serde_json::to_string_pretty(&stats_json(&a, &task, &r)).unwrap());
        if let Err(e) = std::fs::write(path, text) {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    match &r.outcome {
        Outcome::Solved(p) => {
            println!("{}", emit_solution(&task, p));
            ExitCode::SUCCESS
        }
        Outcome::Timeout => {
            eprintln!("timeout");
            ExitCode::from(1)
        }
        Outcome::Exhausted => {
            eprintln!("search space exhausted");
            ExitCode::from(1)
        }
    }
}

fn check_metric(a: CheckArgs) -> ExitCode {
    let kind = match MetricKind::from_name(&a.name) {
        Ok(k) => k,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if !(1..=64).contains(&a.width) || a.samples < 2 {
        eprintln!("error: need width in 1..=64 and at least 2 samples");
        return ExitCode::from(2);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let values = if kind.is_string() {
        orisynth::sample::strings(&mut rng, a.samples, b"ab ", 6)
    } else {
        orisynth::sample::bitvectors(&mut rng, a.samples, a.width)
    };
    // the task constant comes from a few values acting as example outputs
    let m = kind.instantiate(&values[..3.min(values.len())]);
    let violations = check_axioms(m.as_ref(), &values);
    let n = values.len();
    println!("{}: {} triples, {} violations", kind, n * n * n, violations.len());
    for v in violations.iter().take(10) {
        println!("  {v}");
    }
    if violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve(a) => solve(a),
        Command::CheckMetric(a) => check_metric(a),
    }
}
