//! Single-instance execution.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use spatial_select::{centroid_greedy, grid_greedy, matched_resolution, ProblemInstance, SelectionReport};

use crate::error::{CliError, Result};
use crate::instance::instance_hash;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Grid,
    Centroid,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: MethodChoice,
    pub rho: Option<usize>,
    /// Use `rho = ceil((2 |Omega|)^(1/d))`, overriding `rho`.
    pub matched_resource: bool,
    pub seed: u64,
    /// Each method runs this many times; the fastest time is reported.
    pub repeats: usize,
    pub output_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(CliError::Usage("--repeats must be at least 1".into()));
        }
        if self.rho == Some(0) {
            return Err(CliError::Usage("--rho must be at least 1".into()));
        }
        let needs_grid = matches!(self.method, MethodChoice::Grid | MethodChoice::Both);
        if needs_grid && self.rho.is_none() && !self.matched_resource {
            return Err(CliError::Usage("the grid method needs --rho or --matched".into()));
        }
        Ok(())
    }

    pub fn grid_resolution(&self, instance: &ProblemInstance) -> Option<usize> {
        if self.matched_resource {
            Some(matched_resolution(instance.omega.len(), instance.dim()))
        } else {
            self.rho
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub instance_hash: String,
    pub seed: u64,
    pub n_pred: usize,
    pub budget: usize,
    pub notes: Vec<String>,
    pub reports: Vec<SelectionReport>,
}

fn timed<F>(repeats: usize, mut f: F) -> Result<SelectionReport>
where
    F: FnMut() -> spatial_select::Result<SelectionReport>,
{
    let mut best = f()?;
    for _ in 1..repeats {
        let next = f()?;
        if next.elapsed_secs < best.elapsed_secs {
            best.elapsed_secs = next.elapsed_secs;
        }
    }
    Ok(best)
}

/// Runs the configured method(s). Timing covers selection only.
pub fn run(config: &RunConfig, instance: &ProblemInstance) -> Result<RunOutput> {
    config.validate()?;
    let mut notes = Vec::new();
    let mut reports = Vec::new();
    if matches!(config.method, MethodChoice::Centroid | MethodChoice::Both) {
        if config.method == MethodChoice::Centroid && (config.rho.is_some() || config.matched_resource) {
            notes.push("grid resolution ignored: centroid selection does not use a grid".to_string());
        }
        reports.push(timed(config.repeats, || centroid_greedy(instance))?);
    }
    if matches!(config.method, MethodChoice::Grid | MethodChoice::Both) {
        let rho = config.grid_resolution(instance).expect("validated");
        if config.matched_resource {
            notes.push(format!("matched-resource grid: rho = {rho} per axis"));
        }
        reports.push(timed(config.repeats, || grid_greedy(instance, rho))?);
    }
    Ok(RunOutput {
        instance_hash: instance_hash(instance),
        seed: config.seed,
        n_pred: instance.omega.len(),
        budget: instance.budget,
        notes,
        reports,
    })
}
