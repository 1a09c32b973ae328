//! Structural and numerical self-checks behind the `verify` subcommand.

use std::f64::consts::FRAC_1_SQRT_2;
use std::time::Instant;

use serde::Serialize;
use spatial_select::analysis::{
    endpoint_ratio_bound, endpoint_ratio_sweep, gain_equivalence_sweep, midpoint_threshold_sweep,
    oracle_quality_sweep, reproduce_example1, DEFAULT_RESOLUTION,
};
use spatial_select::matched_resolution;

use crate::error::Result;

/// Absolute tolerance on the counterexample gains 0.1021 and 0.1025.
pub const EXAMPLE1_TOL: f64 = 5e-4;
/// Relative tolerance of incremental against direct gains.
pub const GAIN_REL_TOL: f64 = 1e-8;
/// Discretization slack on the endpoint ratio bound.
pub const RATIO_SLACK: f64 = 1e-6;
/// Length scales of the midpoint sweep.
pub const MIDPOINT_LENGTH_SCALES: [f64; 3] = [0.5, FRAC_1_SQRT_2, 8.33];

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Random endpoint-ratio cases; gain-equivalence cases are a fifth of this.
    pub sweep_size: usize,
    pub resolution: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            sweep_size: 1000,
            resolution: DEFAULT_RESOLUTION,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn timed<F>(name: &'static str, f: F) -> Result<CheckOutcome>
where
    F: FnOnce() -> Result<(bool, String)>,
{
    let start = Instant::now();
    let (passed, detail) = f()?;
    Ok(CheckOutcome {
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn example1_check() -> Result<CheckOutcome> {
    timed("example1", || {
        let e = reproduce_example1()?;
        let ok = (e.gain_a - 0.1021).abs() <= EXAMPLE1_TOL
            && (e.gain_b - 0.1025).abs() <= EXAMPLE1_TOL
            && e.violates_submodularity();
        Ok((
            ok,
            format!("gain(A) = {:.6}, gain(B) = {:.6}, diminishing returns violated: {}", e.gain_a, e.gain_b, e.violates_submodularity()),
        ))
    })
}

pub fn gain_equivalence_check(cases: usize, seed: u64) -> Result<CheckOutcome> {
    timed("gain_equivalence", || {
        let s = gain_equivalence_sweep(cases, seed, GAIN_REL_TOL)?;
        Ok((
            s.failures == 0 && s.cases > 0,
            format!("{} cases, {} failures, max relative error {:.3e}", s.cases, s.failures, s.max_rel_error),
        ))
    })
}

pub fn midpoint_check(per_scale: usize, resolution: usize) -> Result<CheckOutcome> {
    timed("midpoint_threshold", || {
        let s = midpoint_threshold_sweep(&MIDPOINT_LENGTH_SCALES, per_scale, resolution)?;
        Ok((
            s.mismatches.is_empty(),
            format!(
                "{} cases, {} within one step of the threshold, {} mismatches{}",
                s.cases,
                s.boundary_cases,
                s.mismatches.len(),
                s.mismatches
                    .first()
                    .map(|m| format!(" (first: L = {}, separation = {})", m.length_scale, m.separation))
                    .unwrap_or_default()
            ),
        ))
    })
}

pub fn endpoint_ratio_check(cases: usize, resolution: usize, seed: u64) -> Result<CheckOutcome> {
    timed("endpoint_ratio", || {
        let s = endpoint_ratio_sweep(cases, resolution, seed)?;
        let bound = endpoint_ratio_bound();
        Ok((
            s.min_ratio >= 0.62 - RATIO_SLACK && s.min_ratio >= bound - RATIO_SLACK,
            format!(
                "{} cases, min ratio {:.6} at separation {:.4} L (bound {:.6})",
                s.cases, s.min_ratio, s.min_case_separation_over_l, bound
            ),
        ))
    })
}

pub fn oracle_quality_check(instances: usize, seed: u64) -> Result<CheckOutcome> {
    timed("oracle_quality", || {
        let s = oracle_quality_sweep(instances, seed)?;
        let min = s.ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let ok = s.exceeded == 0 && s.within_90 * 10 >= s.instances * 9;
        Ok((
            ok,
            format!(
                "{} instances, greedy above optimum: {}, ratio >= 0.9: {}, min ratio {:.4}",
                s.instances, s.exceeded, s.within_90, min
            ),
        ))
    })
}

pub fn grid_arithmetic_check() -> Result<CheckOutcome> {
    timed("grid_arithmetic", || {
        let got: Vec<usize> = [20, 300, 1000].iter().map(|&n| matched_resolution(n, 2)).collect();
        let exact = (1..=5000).all(|n| {
            let r = matched_resolution(n, 2);
            r * r >= 2 * n && (r - 1) * (r - 1) < 2 * n
        });
        Ok((
            got == [7, 25, 45] && exact,
            format!("|Omega| = 20, 300, 1000 -> {}x{0}, {}x{1}, {}x{2}", got[0], got[1], got[2]),
        ))
    })
}

pub fn run_verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    Ok(VerifyReport {
        checks: vec![
            example1_check()?,
            gain_equivalence_check((opts.sweep_size / 5).max(1), opts.seed)?,
            midpoint_check(100, opts.resolution)?,
            endpoint_ratio_check(opts.sweep_size, opts.resolution, opts.seed)?,
            oracle_quality_check(50, opts.seed)?,
            grid_arithmetic_check()?,
        ],
    })
}
