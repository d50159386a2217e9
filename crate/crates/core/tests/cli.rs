use std::path::Path;
use std::process::{Command, Output};

use indexgame::experiment::read_kpis;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_indexgame"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

const QUICK: &str = r#"{"experiment": "agentic", "name": "quick", "runs": 3, "dynamics": {"max_iters": 80}}"#;

#[test]
fn same_seed_gives_identical_kpis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q.json", QUICK);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&cfg, &a, &["--threads", "1"]).status.success());
    assert!(run(&cfg, &b, &["--threads", "2"]).status.success());
    let ka = std::fs::read(a.join("quick/kpi.csv")).unwrap();
    let kb = std::fs::read(b.join("quick/kpi.csv")).unwrap();
    assert_eq!(ka, kb);
    let other = dir.path().join("c");
    assert!(run(&cfg, &other, &["--seed", "7"]).status.success());
    assert_ne!(ka, std::fs::read(other.join("quick/kpi.csv")).unwrap());
}

#[test]
fn output_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q.json", QUICK);
    let out = run(&cfg, dir.path(), &["--runs", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let root = dir.path().join("quick");
    for method in ["shaped", "price_only", "tatonnement_only", "centralized"] {
        for r in 0..2 {
            let trace = std::fs::read_to_string(root.join(format!("trace_{method}_{r}.csv"))).unwrap();
            assert!(trace.starts_with("iter,W,gap,load,violation,z\n"));
        }
    }
    let trace = std::fs::read_to_string(root.join("trace_shaped_0.csv")).unwrap();
    assert_eq!(trace.lines().count(), 81);
    let rows = read_kpis(&root.join("kpi.csv")).unwrap();
    assert_eq!(rows.len(), 8);
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(root.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs_completed"], 2);
    let stdout: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout, summary);
}

#[test]
fn invalid_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"experiment": "agentic", "dynamics": {"etta": 0.1}}"#,
        r#"{"experiment": "agentic", "dynamics": {"rho": 1.5}}"#,
        r#"{"experiment": "agentic", "population": {"n": "many"}}"#,
        r#"{"experiment": "agentic""#,
    ];
    for (k, body) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("bad{k}.json"), body);
        let out = run(&cfg, dir.path(), &[]);
        assert_eq!(out.status.code(), Some(2), "{body}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = run(&write_config(dir.path(), "bad0.json", cases[0]), dir.path(), &[]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("dynamics.etta"));
}

#[test]
fn centralized_only_run() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"experiment": "agentic", "name": "central", "runs": 2, "methods": ["centralized"], "dynamics": {"max_iters": 50}}"#;
    let cfg = write_config(dir.path(), "c.json", body);
    let out = run(&cfg, dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_kpis(&dir.path().join("central/kpi.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.violation_rate == 0.0));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["tests"], serde_json::json!([]));
}

#[test]
fn analyze_matches_run_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q.json", QUICK);
    assert!(run(&cfg, dir.path(), &[]).status.success());
    let out = bin().arg("analyze").arg(dir.path().join("quick")).output().unwrap();
    assert!(out.status.success());
    let analyzed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let written: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("quick/summary.json")).unwrap()).unwrap();
    assert_eq!(analyzed["methods"], written["methods"]);
    assert_eq!(analyzed["tests"], written["tests"]);
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q.json", QUICK);
    let out = bin()
        .args(["sweep"])
        .arg(&cfg)
        .args(["--param", "dynamics.eta_z", "--values", "0.01,0.03", "--runs", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for v in ["0.01", "0.03"] {
        assert!(dir.path().join(format!("quick/dynamics.eta_z={v}/kpi.csv")).exists());
    }
}

#[test]
fn bench_prints_both_benchmarks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q.json", QUICK);
    let out = bin().arg("bench").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["high_accuracy"]["w_star"].as_f64().unwrap() >= v["equal_budget"]["w_star"].as_f64().unwrap() - 1e-6);
    assert_eq!(v["capacity"], 20.0);
}
