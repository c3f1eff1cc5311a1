use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn orlicz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orlicz")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn premium_of_two_atoms_is_the_l2_norm() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "two_atom.csv", "value,prob\n0,0.5\n2,0.5\n");
    let doc = json(&orlicz(&["premium", "--phi", "power:2", "--data", &data]));
    assert_eq!(doc["command"], "premium");
    let v = doc["result"]["value"].as_f64().unwrap();
    assert!((v - 2f64.sqrt()).abs() < 1e-8, "{v}");
    for key in ["inputs", "diagnostics"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    // the generic solver agrees and reports its bracket
    let doc = json(&orlicz(&["premium", "--phi", "power:2", "--data", &data, "--generic"]));
    assert!((doc["result"]["value"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-8);
    assert!(doc["diagnostics"]["iterations"].as_u64().unwrap() > 0);
}

#[test]
fn hg_of_mean_rule_is_the_mean() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "x13.csv", "1\n3\n");
    let profile = dir.path().join("profile.csv");
    let doc = json(&orlicz(&["hg", "--phi", "power:1", "--data", &data, "--mode", "sample", "--profile", profile.to_str().unwrap()]));
    let v = doc["result"]["value"].as_f64().unwrap();
    assert!((v - 2.0).abs() < 1e-9, "{v}");
    let csv = std::fs::read_to_string(profile).unwrap();
    assert!(csv.starts_with("x,g\n") && csv.lines().count() > 10);
}

#[test]
fn missing_file_is_an_input_error() {
    let out = orlicz(&["premium", "--phi", "power:2", "--data", "/definitely/not/here.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_parameters_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", "1,0.5\n2,0.5\n");
    assert_eq!(orlicz(&["premium", "--phi", "expectile:1.5", "--data", &data]).status.code(), Some(2));
    assert_eq!(orlicz(&["premium", "--phi", "nonsense", "--data", &data]).status.code(), Some(2));
    assert_eq!(orlicz(&["premium", "--phi", "power:2", "--data", &data, "--tol", "0"]).status.code(), Some(2));
    let bad = write(dir.path(), "bad.csv", "1,0.5\n2,0.7\n");
    assert_eq!(orlicz(&["premium", "--phi", "power:2", "--data", &bad]).status.code(), Some(2));
    // arithmetic certificates need a convex Φ
    assert_eq!(orlicz(&["dual-verify", "--phi", "quantile:0.3", "--data", &data]).status.code(), Some(2));
}

#[test]
fn json_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", "0.3,0.2\n1.1,0.5\n2.7,0.3\n");
    for args in [
        vec!["premium", "--phi", "expectile:0.8", "--data", &data],
        vec!["hg", "--phi", "power:2", "--data", &data],
        vec!["dual-verify", "--phi", "power:2", "--data", &data, "--grid", "0.05"],
        vec!["properties", "--phi", "power:2", "--trials", "20", "--seed", "7"],
    ] {
        let a = orlicz(&args);
        let b = Command::new(env!("CARGO_BIN_EXE_orlicz")).args(&args).env("ORLICZ_THREADS", "1").output().unwrap();
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn dual_verify_reports_certificate_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", "0,0.5\n2,0.5\n");
    let doc = json(&orlicz(&["dual-verify", "--phi", "expectile:0.8", "--data", &data]));
    assert!((doc["result"]["primal"].as_f64().unwrap() - 1.6).abs() < 1e-8);
    assert!((doc["result"]["lower_bound"].as_f64().unwrap() - 1.6).abs() < 1e-3);
    assert_eq!(doc["result"]["weak_duality_violations"], 0);
    assert_eq!(doc["diagnostics"]["grid_step"], 0.01);
    let geo = json(&orlicz(&["dual-verify", "--phi", "geomean", "--data", &write(dir.path(), "p.csv", "0.5,0.5\n2,0.5\n"), "--kind", "geom"]));
    assert!((geo["result"]["lower_bound"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn conjugate_serializes_infinity() {
    let doc = json(&orlicz(&["conjugate", "--phi", "power:2", "--y", "2"]));
    // Ψ(y) = y²/4 for x²
    assert!((doc["result"]["values"][0]["value"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    let doc = json(&orlicz(&["conjugate", "--phi", "power:1", "--y", "2"]));
    assert_eq!(doc["result"]["values"][0]["value"], "inf");
    assert_eq!(orlicz(&["conjugate", "--phi", "power:2", "--y=-1"]).status.code(), Some(2));
}

#[test]
fn properties_exit_codes() {
    let ok = orlicz(&["properties", "--phi", "expectile:0.8", "--suite", "convexity", "--trials", "50"]);
    assert_eq!(ok.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(doc["result"]["passed"], true);
    assert_eq!(orlicz(&["properties", "--suite", "no-such-suite"]).status.code(), Some(2));
    // ORLICZ_THREADS must be a positive integer
    let out = Command::new(env!("CARGO_BIN_EXE_orlicz")).args(["properties", "--trials", "1"]).env("ORLICZ_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
