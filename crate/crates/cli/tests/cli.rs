use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmpg"))
        .arg("run")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--log-level", "warn"])
        .args(extra)
        .output()
        .expect("binary runs")
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn duality_report_on_counterexample() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"environment": "counterexample", "algorithm": "duality_report"}"#,
    );
    let out = tmp.path().join("out");
    let res = run(&cfg, &out, &[]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let r = report(&out);
    assert!(r["gap"].as_f64().unwrap() > 0.4);
    assert_eq!(r["dual_value"].as_f64().unwrap(), 3.5);
    let trace = fs::read_to_string(out.join("dual_trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("lambda,d_lambda"));
    assert_eq!(lines.count(), 1000);
}

#[test]
fn grid_runs_are_reproducible_and_safe() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "grid.json",
        r#"{"environment": {"grid": {}}, "algorithm": "ca_known", "epsilon": 0.05, "seed": 7}"#,
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run(&cfg, &a, &[]).status.success());
    assert!(run(&cfg, &b, &[]).status.success());
    for name in ["cost_curve.csv", "run_trace.csv", "gap_curve.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let costs = fs::read_to_string(a.join("cost_curve.csv")).unwrap();
    let mut lines = costs.lines();
    assert_eq!(lines.next(), Some("cycle,V_c"));
    for line in lines {
        let cost: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(cost <= 0.1 + 1e-6, "{line}");
    }
    assert_eq!(report(&a)["converged"], Value::Bool(true));
}

#[test]
fn verify_stored_nash_policy() {
    let tmp = TempDir::new().unwrap();
    let run_cfg = write_config(
        tmp.path(),
        "run.json",
        r#"{"environment": {"congestion": {"n_agents": 4}}, "algorithm": "ca_known",
            "epsilon": 0.05, "init": "even_split"}"#,
    );
    let first = tmp.path().join("first");
    assert!(run(&run_cfg, &first, &[]).status.success());
    let verify_cfg = write_config(
        tmp.path(),
        "verify.json",
        r#"{"environment": {"congestion": {"n_agents": 4}}, "algorithm": "verify",
            "epsilon": 0.05, "init": {"file": "first/final_policy.json"}}"#,
    );
    let second = tmp.path().join("second");
    let res = run(&verify_cfg, &second, &[]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let r = report(&second);
    assert_eq!(r["is_nash"], Value::Bool(true));
    for g in r["nash"]["gaps"].as_array().unwrap() {
        assert!(g.as_f64().unwrap() <= 0.05);
    }
}

#[test]
fn explore_needs_a_seed() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "e.json",
        r#"{"environment": "counterexample", "algorithm": "ca_explore", "epsilon": 0.2, "delta": 0.1,
            "episodes": 200, "solver": "lp"}"#,
    );
    let out = tmp.path().join("out");
    let res = run(&cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("seed"));
    let a = run(&cfg, &out, &["--seed", "3"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let first = fs::read(out.join("run_trace.csv")).unwrap();
    let other = tmp.path().join("other");
    assert!(run(&cfg, &other, &["--seed", "3"]).status.success());
    assert_eq!(first, fs::read(other.join("run_trace.csv")).unwrap());
    let r = report(&out);
    assert_eq!(r["steps"], r["episodes"]);
}

#[test]
fn infeasible_problems_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "inf.json",
        r#"{"environment": {"bimatrix": {"reward": [[1, 0], [0, 1]], "cost": [[1, 1], [1, 1]], "alpha": 0.5}},
            "algorithm": "ca_known", "epsilon": 0.1}"#,
    );
    let res = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(res.status.code(), Some(2));
    let cfg = write_config(
        tmp.path(),
        "bad_policy.json",
        r#"{"environment": "counterexample", "algorithm": "verify", "init": {"file": "p.json"}}"#,
    );
    fs::write(
        tmp.path().join("p.json"),
        r#"{"agents": [{"horizon": 1, "n_states": 1, "n_actions": 2, "probs": [0, 1]},
                       {"horizon": 1, "n_states": 1, "n_actions": 2, "probs": [0, 1]}]}"#,
    )
    .unwrap();
    assert_eq!(
        run(&cfg, &tmp.path().join("out2"), &[]).status.code(),
        Some(2)
    );
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(
        run(&tmp.path().join("missing.json"), &out, &[])
            .status
            .code(),
        Some(1)
    );
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{"environment": "counterexample"}"#,
    );
    assert_eq!(run(&cfg, &out, &[]).status.code(), Some(1));
    let cfg = write_config(
        tmp.path(),
        "wrong_env.json",
        r#"{"environment": {"grid": {}}, "algorithm": "duality_report"}"#,
    );
    assert_eq!(run(&cfg, &out, &[]).status.code(), Some(1));
}

#[test]
fn environment_from_file_reference() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("env.json"), r#""zero_gap""#).unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"environment": {"file": "env.json"}, "algorithm": "duality_report"}"#,
    );
    let out = tmp.path().join("out");
    assert!(run(&cfg, &out, &[]).status.success());
    assert!(report(&out)["gap"].as_f64().unwrap().abs() < 1e-6);
}
