use std::fs;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spatial-select"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn solve_from_omega_file() {
    let dir = tempfile::tempdir().unwrap();
    let omega = dir.path().join("omega.csv");
    fs::write(&omega, "x,y\n0,0\n5,5\n30,10\n12,33\n").unwrap();
    let out = dir.path().join("result.json");
    let o = bin(&[
        "solve",
        "--method",
        "both",
        "--matched",
        "--omega-file",
        omega.to_str().unwrap(),
        "--region",
        "0:40,0:40",
        "--budget",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let reports = json["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0]["method"], "centroid");
    assert_eq!(reports[1]["method"], "grid");
    assert_eq!(reports[1]["ground_set_size"], 9);
    assert_eq!(reports[0]["selected"].as_array().unwrap().len(), 3);
    assert_eq!(json["instance_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn solve_generated_instance_to_stdout() {
    let o = bin(&["solve", "--method", "centroid", "--n-pred", "15", "--budget", "4", "--seed", "3"]);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["n_pred"], 15);
    assert!(json["reports"][0]["total_mse"].as_f64().unwrap() > 0.0);
}

#[test]
fn exit_codes() {
    // Usage errors.
    assert_eq!(bin(&["solve"]).status.code(), Some(1));
    assert_eq!(bin(&["solve", "--method", "grid", "--budget", "2"]).status.code(), Some(1));
    assert_eq!(bin(&["solve", "--budget", "2", "--length-scale", "-1", "--matched"]).status.code(), Some(1));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
    // Missing input file is an I/O error.
    let o = bin(&["solve", "--matched", "--omega-file", "/nonexistent/omega.csv", "--budget", "2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/omega.csv"));
}

#[test]
fn verify_quick() {
    let o = bin(&["verify", "--sweep-size", "50", "--resolution", "5001"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 6);
}

#[test]
fn bench_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite.json");
    fs::write(&suite, r#"{"instances_per_cell": 2, "cells": ["small/sparse"], "warmup": false}"#).unwrap();
    let out = dir.path().join("out");
    let o = bin(&["bench", "--suite-file", suite.to_str().unwrap(), "--out-dir", out.to_str().unwrap(), "--jobs", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let runs = fs::read_to_string(out.join("runs.csv")).unwrap();
    let mut lines = runs.lines();
    assert_eq!(lines.next().unwrap(), "env,regime,seed,method,rho,ground_set,k,objective,mse,seconds");
    assert_eq!(lines.count(), 4);
    for f in ["escalation.csv", "summary.csv", "bench.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let esc = fs::read_to_string(out.join("escalation.csv")).unwrap();
    assert!(esc.lines().next().unwrap().ends_with("status"));
}

#[test]
fn bench_bad_suite_file() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite.json");
    fs::write(&suite, "{ not json").unwrap();
    let o = bin(&["bench", "--suite-file", suite.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}
