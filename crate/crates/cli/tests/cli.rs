use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_orisynth"))
}

fn task(rel: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../tasks")).join(rel)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn stats_of(extra: &[&str]) -> (Output, serde_json::Value) {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("stats.json");
    let example = task("example.sl");
    let mut args = vec!["solve", example.to_str().unwrap(), "--stats", stats.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = run(&args);
    let json = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    (out, json)
}

#[test]
fn overview_walkthrough_keeps_39_programs() {
    let (out, s) = stats_of(&["--single-instance", "--metrics", "overview", "--radius-percent", "100"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("(define-fun f ((x String)) String "), "{stdout}");
    assert_eq!(s["outcome"], "solved");
    assert_eq!(s["programs"], 39);
    assert_eq!(s["instances"][0]["iterations"], 2);
}

#[test]
fn unpruned_counts_per_level() {
    let (_, s) = stats_of(&["--no-prune", "--no-learn", "--single-instance"]);
    let levels: Vec<u64> = s["instances"][0]["per_iteration"][0]["levels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l["kept"].as_u64().unwrap())
        .collect();
    assert_eq!(&levels[..7], &[4, 0, 9, 6, 27, 56, 119]);
}

#[test]
fn portfolio_solves_example() {
    let (out, s) = stats_of(&[]);
    assert!(out.status.success());
    assert_eq!(s["outcome"], "solved");
    assert!(s["winner"].is_string());
    assert_eq!(s["instances"].as_array().unwrap().len(), 4);
}

#[test]
fn thread_cap_limits_instances() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("s.json");
    let out = bin()
        .env("MERLIN_THREADS", "2")
        .args(["solve", task("micro/xnor.sl").to_str().unwrap(), "--stats", stats.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    let inst = s["instances"].as_array().unwrap();
    assert_eq!(inst.len(), 2);
    assert!(inst.iter().any(|i| i["metric"] == "inf"));
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.sl");
    std::fs::write(&bad, "(set-logic SLIA)\n(synth-fun f ((x String)) String ((S String (x (str.reverse S)))))\n")
        .unwrap();
    let out = run(&["solve", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("str.reverse"), "{err}");

    let missing = dir.path().join("missing.sl");
    assert_eq!(run(&["solve", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn unknown_metric_exits_2() {
    let out = run(&["solve", task("example.sl").to_str().unwrap(), "--metrics", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_metric_reports_no_violations() {
    for m in ["overview", "concat", "substr", "lvst", "and", "or", "mul", "hd"] {
        let out = run(&["check-metric", m, "--samples", "24"]);
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(out.status.success(), "{m}: {text}");
        assert!(text.contains(", 0 violations"), "{text}");
    }
}
