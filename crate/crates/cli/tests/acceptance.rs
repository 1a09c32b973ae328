//! Exit criteria for the selection library and harness. Every criterion runs
//! in sequence inside one test so timings are not disturbed by parallel
//! tests; each prints one PASS/FAIL line.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use spatial_select::analysis::{check_midpoint_criterion, OneDTwoPointCase, DEFAULT_RESOLUTION};
use spatial_select::{grid_greedy, matched_resolution, CovarianceModel, Method, Region};
use spatial_select_cli::bench::{BenchOutput, EscalationStatus};
use spatial_select_cli::generate_instance;
use spatial_select_cli::verify::{
    endpoint_ratio_check, example1_check, gain_equivalence_check, midpoint_check, oracle_quality_check, CheckOutcome,
};

struct Ledger {
    failures: Vec<String>,
}

impl Ledger {
    fn record(&mut self, id: &str, passed: bool, detail: impl AsRef<str>) {
        println!("[{}] criterion {id}: {}", if passed { "PASS" } else { "FAIL" }, detail.as_ref());
        if !passed {
            self.failures.push(id.to_string());
        }
    }

    fn check(&mut self, id: &str, outcome: CheckOutcome, limit_secs: f64) {
        let in_time = outcome.seconds < limit_secs;
        self.record(
            id,
            outcome.passed && in_time,
            format!("{} [{:.2}s, limit {limit_secs}s]", outcome.detail, outcome.seconds),
        );
    }
}

const DESK_SUITE: &str = r#"{
    "instances_per_cell": 5,
    "seed": 2024,
    "cells": ["small/sparse", "small/moderate", "small/dense",
              "med/sparse", "med/moderate", "med/dense",
              "large/sparse"]
}"#;

fn run_bench_binary(suite: &Path, out_dir: &Path) -> BenchOutput {
    let status = Command::new(env!("CARGO_BIN_EXE_spatial-select"))
        .arg("bench")
        .arg("--suite-file")
        .arg(suite)
        .arg("--out-dir")
        .arg(out_dir)
        .status()
        .expect("bench binary runs");
    assert!(status.success(), "bench exited with {status}");
    let text = std::fs::read_to_string(out_dir.join("bench.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// `(env, regime, seed, method, objective, mse)` columns of `runs.csv`, as text.
fn quality_columns(dir: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_path(dir.join("runs.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let pick: Vec<usize> = ["env", "regime", "seed", "method", "rho", "ground_set", "objective", "mse"]
        .iter()
        .map(|c| headers.iter().position(|h| h == *c).unwrap())
        .collect();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            pick.iter().map(|&i| r[i].to_string()).collect()
        })
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn acceptance_criteria() {
    let mut ledger = Ledger { failures: vec![] };

    // 1. Non-submodularity counterexample.
    ledger.check("1 (example gains 0.1021 / 0.1025 +- 5e-4)", example1_check().unwrap(), 1.0);

    // 2. Incremental gain vs. direct difference.
    ledger.check("2 (incremental gain == direct, 1e-8 rel)", gain_equivalence_check(250, 77).unwrap(), 30.0);

    // 3. Midpoint threshold, including the two reference separations.
    let l = std::f64::consts::FRAC_1_SQRT_2;
    let model = CovarianceModel::new(1.0, l, 1.0).unwrap();
    let near = check_midpoint_criterion(&OneDTwoPointCase::new(0.0, 0.9, model).unwrap(), DEFAULT_RESOLUTION).unwrap();
    let far = check_midpoint_criterion(&OneDTwoPointCase::new(0.0, 1.1, model).unwrap(), DEFAULT_RESOLUTION).unwrap();
    let mut sweep = midpoint_check(100, DEFAULT_RESOLUTION).unwrap();
    sweep.passed &= near && !far;
    sweep.detail = format!("{}; 0.9 -> midpoint {near}, 1.1 -> midpoint {far}", sweep.detail);
    ledger.check("3 (midpoint optimal iff separation <= sqrt(2) L)", sweep, 30.0);

    // 4. Endpoint ratio bound.
    ledger.check("4 (endpoint ratio >= 0.62 - 1e-6)", endpoint_ratio_check(1000, DEFAULT_RESOLUTION, 91).unwrap(), 60.0);

    // 5. Greedy against exhaustive search.
    ledger.check("5 (greedy <= optimum, >= 0.9 on 90%)", oracle_quality_check(50, 13).unwrap(), f64::INFINITY);

    // 6. Matched-resource grid sizes.
    let region = Region::square(40.0).unwrap();
    let sizes: Vec<(usize, usize, usize)> = [20usize, 300, 1000]
        .iter()
        .map(|&n| {
            let inst = generate_instance(&region, n, 1, CovarianceModel::SURVEY, 1).unwrap();
            let rho = matched_resolution(n, 2);
            (n, rho, grid_greedy(&inst, rho).unwrap().ground_set_size)
        })
        .collect();
    let ok = sizes == [(20, 7, 49), (300, 25, 625), (1000, 45, 2025)];
    ledger.record("6 (matched grids 7x7, 25x25, 45x45)", ok, format!("{sizes:?}"));

    // 7 and 8. Desk-scale benchmark, run twice through the binary.
    let tmp = tempfile::tempdir().unwrap();
    let suite_path = tmp.path().join("suite.json");
    std::fs::write(&suite_path, DESK_SUITE).unwrap();
    let start = Instant::now();
    let first = run_bench_binary(&suite_path, &tmp.path().join("run1"));
    let bench_secs = start.elapsed().as_secs_f64();
    let second = run_bench_binary(&suite_path, &tmp.path().join("run2"));

    for cell in &first.summary {
        println!(
            "    {:<6} {:<9} {:<8} mse {:>12.4} +- {:<10.4} {:.3}s",
            cell.env,
            cell.regime,
            cell.method.to_string(),
            cell.mse_mean,
            cell.mse_std,
            cell.seconds_mean
        );
    }
    let cell_mse = |method: Method| {
        mean(
            first
                .runs
                .iter()
                .filter(|r| r.env == "large" && r.regime == "sparse" && r.method == method)
                .map(|r| r.mse),
        )
    };
    let (centroid_mse, grid_mse) = (cell_mse(Method::Centroid), cell_mse(Method::Grid));
    ledger.record(
        "7a (large/sparse: centroid mean MSE <= grid mean MSE)",
        centroid_mse <= grid_mse,
        format!("centroid {centroid_mse:.4}, grid {grid_mse:.4}"),
    );

    let dense: Vec<_> = first.escalation.iter().filter(|e| e.regime == "dense").collect();
    for e in &dense {
        println!(
            "    {:<6} seed {:>14} rho {:>3} -> {:>3} {:?} grid {:.3}s (total {:.3}s) centroid {:.3}s",
            e.env, e.seed, e.matched_rho, e.final_rho, e.status, e.grid_seconds, e.grid_total_seconds, e.centroid_seconds
        );
    }
    let slower = dense.iter().filter(|e| e.grid_seconds >= e.centroid_seconds).count();
    let parity = dense.iter().filter(|e| e.status == EscalationStatus::Parity).count();
    ledger.record(
        "7b (dense: grid time-to-parity >= centroid time on >= 80%)",
        !dense.is_empty() && slower * 5 >= dense.len() * 4,
        format!("{slower}/{} instances, parity reached on {parity}", dense.len()),
    );
    ledger.record(
        "7 (desk-scale runtime < 15 min)",
        bench_secs < 900.0,
        format!("{bench_secs:.1}s per bench run"),
    );

    let a = quality_columns(&tmp.path().join("run1"));
    let b = quality_columns(&tmp.path().join("run2"));
    let same_json = first
        .runs
        .iter()
        .zip(&second.runs)
        .all(|(x, y)| x.objective.to_bits() == y.objective.to_bits() && x.mse.to_bits() == y.mse.to_bits())
        && first
            .escalation
            .iter()
            .zip(&second.escalation)
            .all(|(x, y)| x.final_rho == y.final_rho && x.grid_objective.to_bits() == y.grid_objective.to_bits());
    ledger.record(
        "8 (identical seeds -> bit-identical objective/MSE columns)",
        !a.is_empty() && a == b && same_json && first.runs.len() == second.runs.len(),
        format!("{} rows compared", a.len()),
    );

    assert!(ledger.failures.is_empty(), "failed criteria: {:?}", ledger.failures);
}
