//! Benchmark protocol: matched-resource quality comparison and the
//! grid-escalation run-time comparison, over environment x regime cells.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use spatial_select::{centroid_greedy, grid_greedy, matched_resolution, CovarianceModel, Method, Region, SelectionReport};

use crate::error::{CliError, Result};
use crate::instance::{generate_instance, GENERATOR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub name: String,
    /// The environment is `[0, side]^2` meters.
    pub side: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub name: String,
    pub n_pred: usize,
    pub budget: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EscalationSettings {
    pub enabled: bool,
    /// Largest grid resolution tried.
    pub rho_cap: usize,
    /// Parity holds once grid objective >= `parity * centroid objective`.
    pub parity: f64,
}

impl Default for EscalationSettings {
    fn default() -> Self {
        EscalationSettings {
            enabled: true,
            rho_cap: 512,
            parity: 0.999,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkSuite {
    pub environments: Vec<Environment>,
    pub regimes: Vec<Regime>,
    pub model: CovarianceModel,
    pub instances_per_cell: usize,
    pub seed: u64,
    pub escalation: EscalationSettings,
    /// `"environment/regime"` pairs to run; every combination when absent.
    pub cells: Option<Vec<String>>,
    pub warmup: bool,
}

impl Default for BenchmarkSuite {
    fn default() -> Self {
        let env = |name: &str, side| Environment {
            name: name.into(),
            side,
        };
        let regime = |name: &str, n_pred, budget| Regime {
            name: name.into(),
            n_pred,
            budget,
        };
        BenchmarkSuite {
            environments: vec![env("small", 40.0), env("med", 120.0), env("large", 600.0)],
            regimes: vec![
                regime("sparse", 20, 8),
                regime("moderate", 300, 75),
                regime("dense", 1000, 200),
            ],
            model: CovarianceModel::SURVEY,
            instances_per_cell: 10,
            seed: 0,
            escalation: EscalationSettings::default(),
            cells: None,
            warmup: true,
        }
    }
}

impl BenchmarkSuite {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::json(path, e))
    }

    /// Cells in declaration order (environment-major).
    pub fn selected_cells(&self) -> Result<Vec<(usize, usize)>> {
        let all: Vec<(usize, usize)> = (0..self.environments.len())
            .flat_map(|e| (0..self.regimes.len()).map(move |r| (e, r)))
            .collect();
        let Some(wanted) = &self.cells else {
            return Ok(all);
        };
        for w in wanted {
            let known = all.iter().any(|&(e, r)| self.cell_name(e, r) == *w);
            if !known {
                return Err(CliError::Usage(format!("unknown benchmark cell `{w}`")));
            }
        }
        Ok(all
            .into_iter()
            .filter(|&(e, r)| wanted.contains(&self.cell_name(e, r)))
            .collect())
    }

    fn cell_name(&self, e: usize, r: usize) -> String {
        format!("{}/{}", self.environments[e].name, self.regimes[r].name)
    }

    /// Seed of instance `i` in cell `(e, r)`.
    pub fn instance_seed(&self, e: usize, r: usize, i: usize) -> u64 {
        self.seed
            .wrapping_add((e as u64) << 40)
            .wrapping_add((r as u64) << 32)
            .wrapping_add(i as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub env: String,
    pub regime: String,
    pub seed: u64,
    pub method: Method,
    pub rho: Option<usize>,
    pub ground_set: usize,
    pub k: usize,
    pub objective: f64,
    pub mse: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscalationStatus {
    Parity,
    ParityNotReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscalationRow {
    pub env: String,
    pub regime: String,
    pub seed: u64,
    pub matched_rho: usize,
    pub final_rho: usize,
    pub centroid_objective: f64,
    pub grid_objective: f64,
    pub centroid_seconds: f64,
    /// Grid time at the final resolution.
    pub grid_seconds: f64,
    /// Grid time summed over every resolution tried.
    pub grid_total_seconds: f64,
    pub status: EscalationStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub env: String,
    pub regime: String,
    pub method: Method,
    pub instances: usize,
    pub objective_mean: f64,
    pub mse_mean: f64,
    pub mse_std: f64,
    pub seconds_mean: f64,
    pub seconds_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOutput {
    pub suite: BenchmarkSuite,
    pub generator: String,
    pub runs: Vec<RunRow>,
    pub escalation: Vec<EscalationRow>,
    pub summary: Vec<CellSummary>,
}

fn row(env: &str, regime: &str, seed: u64, rep: &SelectionReport) -> RunRow {
    RunRow {
        env: env.to_string(),
        regime: regime.to_string(),
        seed,
        method: rep.method,
        rho: rep.rho,
        ground_set: rep.ground_set_size,
        k: rep.selected.len(),
        objective: rep.objective,
        mse: rep.total_mse,
        seconds: rep.elapsed_secs,
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Runs every selected cell and returns rows sorted by
/// (environment, regime, seed, method), in suite declaration order.
pub fn run_suite(suite: &BenchmarkSuite) -> Result<BenchOutput> {
    if suite.instances_per_cell == 0 {
        return Err(CliError::Usage("instances_per_cell must be at least 1".into()));
    }
    let cells = suite.selected_cells()?;
    let mut runs = Vec::new();
    let mut escalation = Vec::new();

    if suite.warmup {
        if let Some(&(e, r)) = cells.first() {
            let inst = cell_instance(suite, e, r, 0)?;
            let rho = matched_resolution(inst.omega.len(), inst.dim());
            centroid_greedy(&inst)?;
            grid_greedy(&inst, rho)?;
        }
    }

    for &(e, r) in &cells {
        let env = &suite.environments[e];
        let regime = &suite.regimes[r];
        for i in 0..suite.instances_per_cell {
            let seed = suite.instance_seed(e, r, i);
            let inst = cell_instance(suite, e, r, i)?;
            let rho = matched_resolution(inst.omega.len(), inst.dim());
            let centroid = centroid_greedy(&inst)?;
            let grid = grid_greedy(&inst, rho)?;
            runs.push(row(&env.name, &regime.name, seed, &centroid));
            runs.push(row(&env.name, &regime.name, seed, &grid));

            if suite.escalation.enabled {
                escalation.push(escalate(suite, &env.name, &regime.name, seed, &inst, &centroid, grid)?);
            }
        }
    }

    let mut summary = Vec::new();
    for &(e, r) in &cells {
        for method in [Method::Centroid, Method::Grid] {
            let env = &suite.environments[e].name;
            let regime = &suite.regimes[r].name;
            let cell: Vec<&RunRow> = runs
                .iter()
                .filter(|x| &x.env == env && &x.regime == regime && x.method == method)
                .collect();
            let (mse_mean, mse_std) = mean_std(cell.iter().map(|x| x.mse));
            let (seconds_mean, seconds_std) = mean_std(cell.iter().map(|x| x.seconds));
            summary.push(CellSummary {
                env: env.clone(),
                regime: regime.clone(),
                method,
                instances: cell.len(),
                objective_mean: mean_std(cell.iter().map(|x| x.objective)).0,
                mse_mean,
                mse_std,
                seconds_mean,
                seconds_std,
            });
        }
    }

    Ok(BenchOutput {
        suite: suite.clone(),
        generator: GENERATOR.to_string(),
        runs,
        escalation,
        summary,
    })
}

fn cell_instance(suite: &BenchmarkSuite, e: usize, r: usize, i: usize) -> Result<spatial_select::ProblemInstance> {
    let region = Region::square(suite.environments[e].side)?;
    let regime = &suite.regimes[r];
    generate_instance(&region, regime.n_pred, regime.budget, suite.model, suite.instance_seed(e, r, i))
}

/// Doubles the grid resolution from the matched value until the grid
/// objective reaches parity with the centroid objective or the cap is hit.
fn escalate(
    suite: &BenchmarkSuite,
    env: &str,
    regime: &str,
    seed: u64,
    inst: &spatial_select::ProblemInstance,
    centroid: &SelectionReport,
    matched: SelectionReport,
) -> Result<EscalationRow> {
    let settings = &suite.escalation;
    let matched_rho = matched.rho.expect("grid report carries rho");
    let target = settings.parity * centroid.objective;
    let mut grid = matched;
    let mut rho = matched_rho;
    let mut total = grid.elapsed_secs;
    while grid.objective < target && rho < settings.rho_cap {
        rho = (rho * 2).min(settings.rho_cap);
        grid = grid_greedy(inst, rho)?;
        total += grid.elapsed_secs;
    }
    Ok(EscalationRow {
        env: env.to_string(),
        regime: regime.to_string(),
        seed,
        matched_rho,
        final_rho: rho,
        centroid_objective: centroid.objective,
        grid_objective: grid.objective,
        centroid_seconds: centroid.elapsed_secs,
        grid_seconds: grid.elapsed_secs,
        grid_total_seconds: total,
        status: if grid.objective >= target {
            EscalationStatus::Parity
        } else {
            EscalationStatus::ParityNotReached
        },
    })
}

/// Writes `runs.csv`, `escalation.csv`, `summary.csv` and `bench.json`.
pub fn write_outputs(out: &BenchOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_csv(&dir.join("runs.csv"), &out.runs)?;
    write_csv(&dir.join("escalation.csv"), &out.escalation)?;
    write_csv(&dir.join("summary.csv"), &out.summary)?;
    let path = dir.join("bench.json");
    let text = serde_json::to_string_pretty(out).map_err(|e| CliError::json(&path, e))?;
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Runs the suite and writes its outputs.
pub fn bench(suite: &BenchmarkSuite, out_dir: &Path) -> Result<BenchOutput> {
    let out = run_suite(suite)?;
    write_outputs(&out, out_dir)?;
    Ok(out)
}
