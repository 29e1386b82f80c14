use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fnorm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fnorm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fnorm-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn eval_exponential_example() {
    let out = fnorm(&["eval", "--spec", r#"{"type":"exponential","lambda":1}"#, "--point", "1,1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let value = v["outputs"]["value"].as_f64().unwrap();
    assert!((value - (1.0 + (-1.0f64).exp())).abs() < 1e-12);
    assert_eq!(v["outputs"]["method"], "closed");
    assert_eq!(v["command"], "eval");
}

#[test]
fn validate_reports_h_violation() {
    let out = fnorm(&["validate", "--spec", r#"{"type":"degenerate","c":[1,0]}"#]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["error"]["kind"], "domain");
    assert_eq!(v["outputs"]["report"]["violations"][0]["coordinate"], 1);

    let ok = fnorm(&["validate", "--spec", "uniform"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["outputs"]["passed"], true);
}

#[test]
fn extremal_independence_is_two() {
    let out = fnorm(&["extremal", "--copula", "independence", "--dim", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let theta = json(&out)["outputs"]["theta"].as_f64().unwrap();
    assert!((theta - 2.0).abs() < 0.05, "{theta}");
}

#[test]
fn usage_errors_exit_64_and_help_exits_0() {
    assert_eq!(fnorm(&["eval", "--bogus"]).status.code(), Some(64));
    assert_eq!(fnorm(&["no-such-command"]).status.code(), Some(64));
    assert_eq!(fnorm(&["eval", "--help"]).status.code(), Some(0));
    for sub in [
        "eval", "invert", "classify", "extremal", "estimate", "clt", "limit-sim", "product", "logfnorm",
        "clt-demo", "sphere", "hr-sphere", "hausdorff", "wasserstein", "converge", "validate",
    ] {
        let out = fnorm(&[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{sub}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn numeric_failures_exit_2_with_partial_result() {
    let out = fnorm(&[
        "eval", "--spec", "pareto", "--point", "1,1", "--method", "quad", "--max-subdivisions", "1", "--abs-tol",
        "1e-15",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["error"]["kind"], "integration-failure");
    assert!(v["error"]["partial_estimate"].is_number());

    let out = fnorm(&["limit-sim", "--spec", "pareto", "--paths", "10", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "bridge-representation-unavailable");
}

#[test]
fn stochastic_commands_require_a_seed() {
    let out = fnorm(&["clt-demo", "--replications", "100"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["kind"], "seed-required");
    let out = fnorm(&["eval", "--spec", "uniform", "--point", "1,1", "--method", "mc"]);
    assert_eq!(json(&out)["error"]["kind"], "seed-required");
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["clt-demo", "--ns", "1,100", "--replications", "20000", "--seed", "3"];
    let a = fnorm(&args);
    let b = fnorm(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let args = ["eval", "--spec", "exponential", "--point", "1,2", "--method", "mc", "--mc-n", "50000", "--seed", "9"];
    assert_eq!(fnorm(&args).stdout, fnorm(&args).stdout);

    let args = ["limit-sim", "--spec", "uniform", "--paths", "200", "--seed", "7", "--steps", "1024"];
    assert_eq!(fnorm(&args).stdout, fnorm(&args).stdout);
}

#[test]
fn figure_data_regenerates_identically() {
    for (name, args) in [
        ("uniform", vec!["sphere", "--spec", "uniform"]),
        ("hr", vec!["hr-sphere"]),
    ] {
        let p1 = scratch(&format!("{name}-1.csv"));
        let p2 = scratch(&format!("{name}-2.csv"));
        for p in [&p1, &p2] {
            let mut a = args.clone();
            a.extend(["--out", p.to_str().unwrap()]);
            assert_eq!(fnorm(&a).status.code(), Some(0));
        }
        let (b1, b2) = (std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        assert!(!b1.is_empty());
        assert_eq!(b1, b2, "{name}");
        assert!(String::from_utf8(b1).unwrap().starts_with("x0,x1\n"));
    }
}

#[test]
fn spec_echo_round_trips() {
    for spec in [
        r#"{"type":"exponential","lambda":2.5}"#,
        r#"{"type":"bernoulli","p":0.3}"#,
        r#"{"type":"degenerate","c":[1.5,2]}"#,
        r#"{"type":"lognormal","mu":0.1,"sigma2":0.5}"#,
        r#"{"type":"product","components":[{"type":"uniform"},{"type":"pareto","gamma":0.5}]}"#,
        r#"{"type":"empirical","rows":[[1,2],[3,0.5]]}"#,
    ] {
        let v = json(&fnorm(&["validate", "--spec", spec]));
        let echo = v["inputs"]["spec"].to_string();
        let again = json(&fnorm(&["validate", "--spec", &echo]));
        assert_eq!(v["inputs"]["spec"], again["inputs"]["spec"], "{spec}");
    }
}

#[test]
fn sphere_and_hausdorff_files() {
    let a = scratch("hr-a.csv");
    let b = scratch("hr-b.csv");
    fnorm(&["hr-sphere", "--sigma", "1", "--out", a.to_str().unwrap()]);
    fnorm(&["hr-sphere", "--sigma", "1.001", "--out", b.to_str().unwrap()]);
    let out = fnorm(&["hausdorff", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap(), "--metric", "l2"]);
    assert_eq!(out.status.code(), Some(0));
    let d = json(&out)["outputs"]["distance"].as_f64().unwrap();
    assert!(d > 0.0 && d < 1e-2, "{d}");
    let same = fnorm(&["hausdorff", "--a", a.to_str().unwrap(), "--b", a.to_str().unwrap()]);
    assert_eq!(json(&same)["outputs"]["distance"].as_f64().unwrap(), 0.0);
}

#[test]
fn csv_format_for_tables() {
    let out = fnorm(&["hr-sphere", "--lambda-grid", "1", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x0,x1");
    assert_eq!(lines.len(), 4);
    let out = fnorm(&["eval", "--spec", "uniform", "--point", "0,1", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("value,method,error_bound\n0.5,closed,"), "{text}");
}

#[test]
fn wasserstein_and_converge() {
    let out = fnorm(&["wasserstein", "--a", r#"{"type":"uniform"}"#, "--b", r#"{"type":"degenerate","c":[0.5]}"#]);
    let d = json(&out)["outputs"]["distance"].as_f64().unwrap();
    assert!((d - 0.25).abs() < 1e-10);

    let seq = r#"[{"type":"pareto","gamma":0.75},{"type":"pareto","gamma":0.625}]"#;
    let out = fnorm(&["converge", "--sequence", seq, "--limit", "pareto"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out)["outputs"]["table"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert!(r["deviation"].as_f64().unwrap() <= r["bound"].as_f64().unwrap() + 1e-8);
    }
}

#[test]
fn estimate_from_csv_sample() {
    let p = scratch("sample.csv");
    std::fs::write(&p, "x1\n0.2\n0.9\n0.5\n").unwrap();
    let out = fnorm(&["estimate", "--sample", p.to_str().unwrap(), "--point", "0.5,1"]);
    let v = json(&out)["outputs"]["value"].as_f64().unwrap();
    assert!((v - 1.9 / 3.0).abs() < 1e-15);
}

#[test]
fn classify_builtins() {
    let l2 = json(&fnorm(&["classify", "--norm", "builtin:lp", "--p", "2"]));
    assert_eq!(l2["outputs"]["is_fnorm"], true);
    let l1 = json(&fnorm(&["classify", "--norm", "builtin:l1"]));
    assert_eq!(l1["outputs"]["is_fnorm"], false);
    let sup2 = json(&fnorm(&["classify", "--norm", "builtin:sup", "--scale", "2"]));
    assert_eq!(sup2["outputs"]["is_fnorm"], false);
}
