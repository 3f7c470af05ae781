//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Run with `cargo test --test acceptance`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use orisynth::ast::{Builtin, Grammar, Nonterminal, Op, Production, Sketch, Sort};
use orisynth::deduce::{mul_solutions, Deducer, SketchKind};
use orisynth::enumerate::{CostModel, Enumerator, FlatGrammar, Pruning, ProgramBank, Step};
use orisynth::frontend::{parse_task, parse_task_file};
use orisynth::metric::levenshtein::{levenshtein, LevenshteinAutomaton};
use orisynth::metric::{check_axioms, check_axioms_triples, units, Aggregation, Exact, LiftedOrimetric, MetricKind};
use orisynth::semantics::{eval, satisfies, Bv, ExampleSet, Value};
use orisynth::solver::{
    default_portfolio, progress_check, solve_instance, solve_portfolio, solve_with_history, Outcome, RadiusPolicy,
    SolverConfig,
};
use orisynth::space::{ball, bottom_up_closure, enumerate_in_order, factorize};
use orisynth::task::{Logic, SynthesisTask};

type Check = Result<String, String>;

fn tasks_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../tasks")
}

fn example_task() -> SynthesisTask {
    parse_task(include_str!("../../../tasks/example.sl")).expect("example task parses")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1. kept programs per size on the worked example

fn walkthrough_levels(cfg: &SolverConfig) -> Result<Vec<Vec<u64>>, String> {
    let r = solve_instance(&example_task(), cfg).map_err(|e| e.to_string())?;
    let Outcome::Solved(p) = &r.outcome else { return Err(format!("not solved: {:?}", r.outcome)) };
    ensure(satisfies(p, &example_task().examples), || format!("{p} is wrong"))?;
    Ok(r.stats[0].per_iteration.iter().map(|i| i.kept_per_level()).collect())
}

fn criterion_walkthrough() -> Check {
    let demo = SolverConfig::overview_demo();
    let none = SolverConfig { metric: None, radius: RadiusPolicy::Unbounded, factorize: false, learn: false, ..demo.clone() };
    let oe = SolverConfig { factorize: true, ..none.clone() };
    let op = SolverConfig { factorize: false, learn: false, ..demo.clone() };
    let oe_op = SolverConfig { learn: false, ..demo.clone() };
    let rows: [(&str, &SolverConfig, Vec<u64>); 4] = [
        ("none", &none, vec![4, 0, 16, 64, 128, 1280, 4352]),
        ("OE", &oe, vec![4, 0, 9, 6, 27, 56, 119]),
        ("OP", &op, vec![4, 0, 7, 18, 56, 323, 929]),
        ("OE+OP", &oe_op, vec![4, 0, 5, 6, 19, 50, 81]),
    ];
    for (name, cfg, want) in rows {
        let got = walkthrough_levels(cfg)?;
        let last = got.last().cloned().unwrap_or_default();
        ensure(last == want, || format!("{name}: got {last:?}, want {want:?}"))?;
    }
    let got = walkthrough_levels(&demo)?;
    let want = vec![vec![4, 0, 5, 3], vec![5, 0, 12, 10]];
    ensure(got == want, || format!("learning: got {got:?}, want {want:?}"))?;
    let total: u64 = got.iter().flatten().sum();
    ensure(total == 39, || format!("learning total {total}, want 39"))?;
    Ok("all five rows exact, 39 programs with learning".into())
}

// 2. end-to-end solve of the worked example

fn criterion_solve_example() -> Check {
    let t = example_task();
    let mut lines = Vec::new();
    for (name, r) in [
        ("portfolio", solve_portfolio(&t, &default_portfolio(Logic::Strings))),
        ("overview", solve_instance(&t, &SolverConfig::overview_demo())),
    ] {
        let r = r.map_err(|e| e.to_string())?;
        let p = r.solution().ok_or_else(|| format!("{name}: {:?}", r.outcome))?;
        ensure(satisfies(p, &t.examples), || format!("{name}: {p} fails an example"))?;
        lines.push(format!("{name}: {p}"));
    }
    Ok(lines.join("; "))
}

// 3. orimetric axioms on random and exhaustive samples

fn criterion_axioms() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0usize;
    for kind in MetricKind::STRING.into_iter().chain(MetricKind::BITVEC) {
        let mut pools = Vec::new();
        if kind.is_string() {
            pools.push(orisynth::sample::strings(&mut rng, 24, b"ab ", 6));
            pools.push(orisynth::sample::strings(&mut rng, 24, b"POPL Cnfrec", 10));
        } else {
            pools.push(orisynth::sample::bitvectors(&mut rng, 24, 8));
            pools.push(orisynth::sample::bitvectors(&mut rng, 24, 64));
            pools.push((0..16).map(|v| Value::bv(4, v)).collect());
        }
        for pool in &pools {
            // the pool doubles as the task outputs the constant is derived from
            let m = kind.instantiate(pool);
            let v = check_axioms(m.as_ref(), pool);
            ensure(v.is_empty(), || format!("{kind}: {}", v[0]))?;
            checked += pool.len().pow(3);
        }
        let big = if kind.is_string() {
            orisynth::sample::strings(&mut rng, 300, b"abc", 8)
        } else {
            orisynth::sample::bitvectors(&mut rng, 300, 16)
        };
        let m = kind.instantiate(&big);
        let triples: Vec<(usize, usize, usize)> = (0..10_000)
            .map(|_| (rng.gen_range(0..big.len()), rng.gen_range(0..big.len()), rng.gen_range(0..big.len())))
            .collect();
        let v = check_axioms_triples(m.as_ref(), triples.iter().map(|&(a, b, c)| (&big[a], &big[b], &big[c])));
        ensure(v.is_empty(), || format!("{kind}: {}", v[0]))?;
        checked += triples.len();
    }
    Ok(format!("{checked} triples over 8 metrics, 0 violations (w=4 exhaustive)"))
}

// 4. the four-program toy space

fn criterion_toy_space() -> Check {
    let r = ["x", "y", "op(x)", "op(y)"];
    fn subs(p: &&'static str) -> Vec<&'static str> {
        match *p {
            "op(x)" => vec!["x"],
            "op(y)" => vec!["y"],
            _ => vec![],
        }
    }
    let class1 = |p: &str| usize::from(p.starts_with("op"));
    let m1 = |a: &&str, b: &&str| -> u64 {
        match (class1(a), class1(b)) {
            (x, y) if x == y => 0,
            (0, 1) => 1,
            _ => 2,
        }
    };
    let class2 = |p: &str| match p {
        "op(x)" => 1,
        "op(y)" => 2,
        _ => 0,
    };
    let m2 = |a: &&str, b: &&str| -> u64 {
        const D: [[u64; 3]; 3] = [[0, 1, 2], [1, 0, 3], [1, 2, 0]];
        D[class2(a)][class2(b)]
    };
    let order0 = ["x", "op(y)", "op(x)", "y"];
    let order1 = ["x", "y", "op(y)", "op(x)"];
    let order2 = ["x", "op(x)", "y", "op(y)"];
    let set = |v: Vec<&str>| v.into_iter().map(String::from).collect::<BTreeSet<_>>();
    let checks: Vec<(&str, Vec<&str>, Vec<&str>)> = vec![
        ("Enum0", enumerate_in_order(&order0, subs), vec!["x", "op(x)", "y"]),
        ("Enum1", enumerate_in_order(&order1, subs), r.to_vec()),
        ("Enum2", enumerate_in_order(&order2, subs), r.to_vec()),
        ("BU(R - y)", bottom_up_closure(&["x", "op(x)", "op(y)"], subs), vec!["x", "op(x)"]),
        ("Factorize(m1, order1)", factorize(&order1, m1), vec!["x", "op(y)"]),
        ("Factorize(m2, order2)", factorize(&order2, m2), vec!["x", "op(x)", "op(y)"]),
        ("Factorize(m1, order2)", factorize(&order2, m1), vec!["x", "op(x)"]),
        ("B_0(x)", ball(&r, m1, &"x", 0, true), vec![]),
        ("closed B_0(x)", ball(&r, m1, &"x", 0, false), vec!["x", "y"]),
        ("B_1(x)", ball(&r, m1, &"x", 1, true), vec!["x", "y"]),
        ("closed B_1(x)", ball(&r, m1, &"x", 1, false), vec!["x", "y"]),
        ("closed B_2(x)", ball(&r, m1, &"x", 2, false), r.to_vec()),
        ("B_1(op(x))", ball(&r, m1, &"op(x)", 1, true), vec!["op(x)", "op(y)"]),
        ("closed B_1(op(x))", ball(&r, m1, &"op(x)", 1, false), r.to_vec()),
    ];
    for (name, got, want) in checks {
        ensure(set(got.clone()) == set(want.clone()), || format!("{name}: got {got:?}, want {want:?}"))?;
    }
    let is_bu = |s: &[&'static str]| bottom_up_closure(s, subs).len() == s.len();
    ensure(!is_bu(&factorize(&order1, m1)), || "Factorize(m1, order1) should not be bottom-up".into())?;
    ensure(!is_bu(&factorize(&order2, m2)), || "Factorize(m2, order2) should not be bottom-up".into())?;
    ensure(is_bu(&factorize(&order2, m1)), || "Factorize(m1, order2) should be bottom-up".into())?;
    Ok("Enum, BU, Factorize and ball contents exact".into())
}

// 5. Levenshtein automata against the DP distance

struct AutomatonCheck<'a> {
    target: &'a [u8],
    autos: Vec<LevenshteinAutomaton>,
    alphabet: &'a [u8],
    max_len: usize,
    strings: u64,
    mismatches: u64,
}

impl AutomatonCheck<'_> {
    fn subtree_size(&self, depth: usize) -> u64 {
        let k = self.alphabet.len() as u64;
        (0..=(self.max_len - depth) as u32).map(|e| k.pow(e)).sum()
    }

    fn walk(&mut self, depth: usize, row: &[usize], states: &[u32]) {
        let d = row[self.target.len()];
        for (a, &s) in self.autos.iter().zip(states) {
            if a.is_accepting(s) != (d < a.radius() as usize) {
                self.mismatches += 1;
            }
        }
        self.strings += 1;
        if depth == self.max_len {
            return;
        }
        // Past distance 4 every extension stays past it (row minima never
        // decrease), so if every automaton sits in its absorbing reject state
        // the whole subtree agrees.
        let all_dead = self.autos.iter().zip(states).all(|(a, &s)| a.dead_state() == Some(s));
        if all_dead && row.iter().all(|&v| v >= 4) {
            self.strings += self.subtree_size(depth) - 1;
            return;
        }
        for &c in self.alphabet {
            let mut next = Vec::with_capacity(row.len());
            next.push(row[0] + 1);
            for j in 1..row.len() {
                let sub = row[j - 1] + usize::from(self.target[j - 1] != c);
                next.push(sub.min(row[j] + 1).min(next[j - 1] + 1));
            }
            let ns: Vec<u32> = self.autos.iter().zip(states).map(|(a, &s)| a.step(s, c)).collect();
            self.walk(depth + 1, &next, &ns);
        }
    }
}

fn criterion_automaton() -> Check {
    let alphabet = b"abcd";
    let mut targets: Vec<Vec<u8>> = vec![vec![]];
    let mut frontier = targets.clone();
    for _ in 0..6 {
        frontier = frontier
            .iter()
            .flat_map(|t| alphabet.iter().map(move |&c| [t.as_slice(), &[c]].concat()))
            .collect();
        targets.extend(frontier.iter().cloned());
    }
    let mut strings = 0;
    let mut mismatches = 0;
    for t in &targets {
        let autos: Vec<_> = (1..=4).map(|r| LevenshteinAutomaton::build(t, r).unwrap()).collect();
        for a in &autos {
            if let Some(d) = a.dead_state() {
                ensure(alphabet.iter().all(|&c| a.step(d, c) == d), || "reject state not absorbing".into())?;
            }
        }
        let mut chk = AutomatonCheck { target: t, autos, alphabet, max_len: 8, strings: 0, mismatches: 0 };
        let row: Vec<usize> = (0..=t.len()).collect();
        let states = vec![0; 4];
        chk.walk(0, &row, &states);
        strings += chk.strings;
        mismatches += chk.mismatches;
        ensure(chk.mismatches == 0, || {
            let s = b"";
            format!("target {:?}: {} mismatches (lvst to empty {})", String::from_utf8_lossy(t), chk.mismatches, levenshtein(s, t))
        })?;
    }
    ensure(mismatches == 0, || format!("{mismatches} mismatches"))?;
    Ok(format!("{} targets x {} strings x 4 radii, 0 mismatches", targets.len(), strings / targets.len() as u64))
}

// 6. deduction against evaluation and brute force

fn bv_grammar(w: u32) -> Grammar {
    let s = Sort::BitVec(w);
    let mut productions = vec![Production { lhs: 0, rhs: Sketch::Node(Op::var(0, "x", s), vec![]) }];
    for v in 0..(1u64 << w) {
        productions.push(Production { lhs: 0, rhs: Sketch::Node(Op::Const(Value::bv(w, v)), vec![]) });
    }
    for b in [Builtin::BvNot, Builtin::BvNeg, Builtin::BvAnd, Builtin::BvOr, Builtin::BvXor, Builtin::BvAdd, Builtin::BvMul] {
        let holes = (0..b.arity()).map(|_| Sketch::Hole(0)).collect();
        productions.push(Production { lhs: 0, rhs: Sketch::Node(Op::Builtin(b), holes) });
    }
    Grammar { nonterminals: vec![Nonterminal { name: "S".into(), sort: s }], productions, start: 0 }
}

fn criterion_deduction() -> Check {
    const W: u32 = 8;
    let sort = Sort::BitVec(W);
    let flat = FlatGrammar::new(&bv_grammar(W)).map_err(|e| e.to_string())?;
    let input = vec![Value::bv(W, 0x5a)];
    let examples_for = |o: u64| {
        ExampleSet::new(vec![("x".into(), sort)], sort, vec![input.clone()], vec![Value::bv(W, o)]).unwrap()
    };
    // every 8-bit value as a leaf program
    let mut bank = ProgramBank::new(flat.nonterminals.len());
    let pruning = Pruning {
        ball: None,
        size_threshold: 0,
        equivalence: Some(LiftedOrimetric::new(Arc::new(Exact), &[0], Aggregation::Sum).unwrap()),
    };
    let leaves_examples = examples_for(0);
    let mut en = Enumerator::new(&flat, &leaves_examples, CostModel::new());
    while let Step::Candidate(c) = en.next_step(&bank) {
        bank.try_insert(c, &pruning);
    }
    ensure(bank.entries().len() == 256, || format!("bank has {} leaves", bank.entries().len()))?;
    let id_of = |v: u64| bank.lookup_outputs(&[Value::bv(W, v)]).unwrap();

    for a in 0..256u64 {
        for o in 0..256u64 {
            let brute: Vec<Bv> = (0..256).filter(|x| (a * x) & 0xff == o).map(|x| Bv::new(W, x)).collect();
            ensure(mul_solutions(Bv::new(W, a), Bv::new(W, o)) == brute, || format!("mul_solutions({a}, {o})"))?;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut deduced = 0usize;
    for kind in SketchKind::BITVEC {
        for trial in 0..1000 {
            let o: u64 = rng.gen_range(0..256);
            let op: u64 = match (kind, trial % 2) {
                (SketchKind::And, 0) => o | rng.gen_range(0..256),
                (SketchKind::Or, 0) => o & rng.gen_range(0..256),
                _ => rng.gen_range(0..256),
            };
            let examples = examples_for(o);
            let p = id_of(op);
            let mut d = Deducer::new(&[kind], &flat, &examples.outputs);
            for id in 0..bank.entries().len() {
                if id != p {
                    d.observe(&bank, id);
                }
            }
            let out = d.deduce(&bank, &flat, &examples, p, 1024);
            for prog in &out {
                let v = eval(prog, &input).map_err(|e| e.to_string())?;
                ensure(v == Value::bv(W, o), || format!("{kind:?}: {prog} gives {v}, want {o}"))?;
            }
            deduced += out.len();
            if kind == SketchKind::Mul {
                let p_prog = &bank.entry(p).program;
                let mut args: BTreeSet<u64> = BTreeSet::new();
                for prog in &out {
                    let cs = prog.children();
                    let other = if &cs[0] == p_prog { &cs[1] } else { &cs[0] };
                    args.insert(eval(other, &input).unwrap().as_bv().unwrap().bits());
                }
                let brute: BTreeSet<u64> = (0..256).filter(|x| (op * x) & 0xff == o).collect();
                ensure(args == brute, || format!("mul {op}*x={o}: deduced {args:?}, brute force {brute:?}"))?;
            }
        }
    }
    Ok(format!("9 sketches x 1000 pairs, {deduced} completions all sound, mul sets exact"))
}

// 7. progress of the refinement loop

fn task_files(sub: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(tasks_dir().join(sub))
        .expect("task directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "sl" || e == "json"))
        .collect();
    v.sort();
    v
}

fn criterion_progress() -> Check {
    let files = task_files("strings");
    ensure(files.len() >= 20, || format!("only {} string tasks", files.len()))?;
    let mut runs = 0;
    let mut multi = 0;
    for f in &files {
        let t = parse_task_file(f).map_err(|e| format!("{}: {e}", f.display()))?;
        ensure(t.examples.len() > 1, || format!("{} has one example", f.display()))?;
        let mut solved = false;
        for m in [MetricKind::Concat, MetricKind::Substr, MetricKind::Lvst] {
            let cfg = SolverConfig {
                deduce: false,
                initial_j: 1,
                timeout: Some(Duration::from_secs(2)),
                ..SolverConfig::new(Logic::Strings, Some(m))
            };
            let (r, history) = solve_with_history(&t, &cfg).map_err(|e| e.to_string())?;
            let name = f.file_name().unwrap().to_string_lossy();
            progress_check(&history).map_err(|e| format!("{name} with {m}: {e}"))?;
            let it = r.stats[0].iterations as usize;
            ensure(it <= t.examples.len(), || format!("{name} with {m}: {it} iterations for {} examples", t.examples.len()))?;
            solved |= r.solution().is_some_and(|p| satisfies(p, &t.examples));
            multi += usize::from(it > 1);
            runs += 1;
        }
        ensure(solved, || format!("{} unsolved by every metric", f.display()))?;
    }
    Ok(format!("{} tasks, {runs} runs ({multi} refined at least once), no repeated candidate", files.len()))
}

// 8. pruning never keeps more than plain enumeration

fn criterion_ablation() -> Check {
    let files = task_files("micro");
    let tasks: Vec<SynthesisTask> =
        files.iter().map(|f| parse_task_file(f).map_err(|e| format!("{}: {e}", f.display()))).collect::<Result<_, _>>()?;
    let strings = tasks.iter().filter(|t| t.logic == Logic::Strings).count();
    ensure(strings >= 5 && tasks.len() - strings >= 5, || "micro corpus needs 5 + 5 tasks".into())?;
    let mut baseline_solved = 0;
    for (f, t) in files.iter().zip(&tasks) {
        let name = f.file_name().unwrap().to_string_lossy();
        let base_cfg = SolverConfig { deduce: false, ..SolverConfig::infinity(t.logic) };
        let base = solve_instance(t, &base_cfg).map_err(|e| e.to_string())?;
        let base_levels = base.stats[0].per_iteration[0].kept_per_level();
        if let Some(p) = base.solution() {
            ensure(p.size() <= 9, || format!("{name}: baseline solution {p} larger than 9"))?;
        }
        let metrics: &[MetricKind] = if t.logic == Logic::Strings { &MetricKind::STRING[1..] } else { &MetricKind::BITVEC };
        for &m in metrics {
            let cfg = SolverConfig {
                deduce: false,
                learn: false,
                timeout: Some(Duration::from_secs(10)),
                ..SolverConfig::new(t.logic, Some(m))
            };
            let r = solve_instance(t, &cfg).map_err(|e| e.to_string())?;
            for (k, it) in r.stats[0].per_iteration.iter().enumerate() {
                for (lvl, (a, b)) in it.kept_per_level().iter().zip(&base_levels).enumerate() {
                    ensure(a <= b, || format!("{name} {m} iteration {k} cost {}: kept {a} > {b}", lvl + 1))?;
                }
            }
        }
        if base.solution().is_some() {
            baseline_solved += 1;
            let full = solve_portfolio(t, &default_portfolio(t.logic)).map_err(|e| e.to_string())?;
            ensure(full.solution().is_some_and(|p| satisfies(p, &t.examples)), || format!("{name}: portfolio failed"))?;
        }
    }
    Ok(format!("{} tasks, baseline solved {baseline_solved}, portfolio solved all of them", tasks.len()))
}

type Criterion = (&'static str, fn() -> Check, Duration);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 worked-example counts", criterion_walkthrough, Duration::from_secs(1)),
        ("2 worked-example solve", criterion_solve_example, Duration::from_secs(1)),
        ("3 orimetric axioms", criterion_axioms, Duration::from_secs(30)),
        ("4 toy search space", criterion_toy_space, Duration::from_secs(1)),
        ("5 Levenshtein automaton", criterion_automaton, Duration::from_secs(60)),
        ("6 deduction oracle", criterion_deduction, Duration::from_secs(30)),
        ("7 refinement progress", criterion_progress, Duration::from_secs(300)),
        ("8 pruning ablation", criterion_ablation, Duration::from_secs(300)),
    ];
    let _ = units(1);
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let start = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let el = start.elapsed();
        let res = match res {
            Ok(msg) if el > budget => Err(format!("{msg}, but took {el:.2?} (budget {budget:?})")),
            r => r,
        };
        match res {
            Ok(msg) => println!("PASS  {name}: {msg} [{el:.2?}]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name}: {msg} [{el:.2?}]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 8 criteria failed");
        std::process::exit(1);
    }
    println!("all 8 criteria passed");
}
