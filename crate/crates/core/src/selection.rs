//! Cardinality-constrained greedy selection and its two ground-set
//! constructions: a uniform grid over the region, and clique centroids plus
//! the prediction locations themselves.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{check_dim, common_dim, CovarianceModel, Point, Region};
use crate::error::{Error, Result};
use crate::geometry::{build_graph, clique_centroids, dedup_points, greedy_maximal_cliques, make_grid, GridSpec, DEDUP_TOLERANCE};

/// Greedy stops once the best available gain drops to this level.
pub const GAIN_FLOOR: f64 = 1e-12;

/// Candidate-by-prediction residual matrices up to this many entries are kept
/// in memory across iterations; larger sweeps recompute them blockwise.
pub const RESIDUAL_CACHE_LIMIT: usize = 1 << 25;

const BLOCK: usize = 64;

/// Region, prediction locations, budget and covariance model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub region: Region,
    pub omega: Vec<Point>,
    pub budget: usize,
    pub model: CovarianceModel,
}

impl ProblemInstance {
    pub fn new(region: Region, omega: Vec<Point>, budget: usize, model: CovarianceModel) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::EmptyOmega);
        }
        if budget == 0 {
            return Err(Error::InvalidInstance("budget must be at least 1".into()));
        }
        for p in &omega {
            check_dim(region.dim(), p)?;
            if !region.contains(p, 0.0) {
                return Err(Error::InvalidInstance(format!(
                    "prediction point {:?} lies outside the region",
                    p.coords()
                )));
            }
        }
        Ok(ProblemInstance {
            region,
            omega,
            budget,
            model,
        })
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Grid,
    Centroid,
    /// Caller-supplied ground set.
    Custom,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Grid => "grid",
            Method::Centroid => "centroid",
            Method::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub method: Method,
    /// Selected locations in selection order; may repeat.
    pub selected: Vec<Point>,
    /// Ground-set index of each selection.
    pub selected_indices: Vec<usize>,
    pub objective: f64,
    pub total_mse: f64,
    pub gains: Vec<f64>,
    pub ground_set_size: usize,
    pub rho: Option<usize>,
    pub elapsed_secs: f64,
}

/// Greedy over `ground_set` for up to `instance.budget` rounds. Every round
/// scans the full ground set (already selected points stay eligible) and
/// takes the largest marginal gain, lowest index on ties.
pub fn greedy_select(instance: &ProblemInstance, ground_set: &[Point]) -> Result<SelectionReport> {
    let start = Instant::now();
    let mut report = run_greedy(instance, ground_set)?;
    report.elapsed_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Greedy over a `rho^d` grid spanning the instance region.
pub fn grid_greedy(instance: &ProblemInstance, rho: usize) -> Result<SelectionReport> {
    let start = Instant::now();
    let ground = make_grid(&GridSpec::new(rho, instance.region.clone())?)?;
    let mut report = run_greedy(instance, &ground)?;
    report.method = Method::Grid;
    report.rho = Some(rho);
    report.elapsed_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Ground set of clique centroids followed by the prediction locations, with
/// near-coincident entries merged.
pub fn centroid_ground_set(model: &CovarianceModel, omega: &[Point]) -> Result<Vec<Point>> {
    let graph = build_graph(model, omega)?;
    let cliques = greedy_maximal_cliques(&graph);
    let mut ground = clique_centroids(omega, &cliques);
    ground.extend(omega.iter().cloned());
    Ok(dedup_points(ground, DEDUP_TOLERANCE))
}

/// Greedy over [`centroid_ground_set`].
pub fn centroid_greedy(instance: &ProblemInstance) -> Result<SelectionReport> {
    let start = Instant::now();
    let ground = centroid_ground_set(&instance.model, &instance.omega)?;
    let mut report = run_greedy(instance, &ground)?;
    report.method = Method::Centroid;
    report.elapsed_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

fn run_greedy(instance: &ProblemInstance, ground_set: &[Point]) -> Result<SelectionReport> {
    if ground_set.is_empty() {
        return Err(Error::EmptyGroundSet);
    }
    for p in ground_set {
        check_dim(instance.dim(), p)?;
    }
    let mut sweep = GroundSetSweep::new(&instance.model, &instance.omega, ground_set)?;
    let mut selected_indices = Vec::with_capacity(instance.budget);
    let mut gains = Vec::with_capacity(instance.budget);
    for _ in 0..instance.budget {
        let current = sweep.gains();
        let (best, gain) = argmax(&current)?;
        if gain <= GAIN_FLOOR {
            break;
        }
        sweep.select(best)?;
        selected_indices.push(best);
        gains.push(gain);
    }
    let objective: f64 = gains.iter().sum();
    Ok(SelectionReport {
        method: Method::Custom,
        selected: selected_indices.iter().map(|&i| ground_set[i].clone()).collect(),
        selected_indices,
        objective,
        total_mse: instance.omega.len() as f64 * instance.model.prior_variance() - objective,
        gains,
        ground_set_size: ground_set.len(),
        rho: None,
        elapsed_secs: 0.0,
    })
}

fn argmax(values: &[f64]) -> Result<(usize, f64)> {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            return Err(Error::Numerical(format!("marginal gain of candidate {i} is NaN")));
        }
        if v > best.1 {
            best = (i, v);
        }
    }
    Ok(best)
}

/// Marginal gains of every ground-set element, maintained across greedy
/// rounds.
///
/// Holds the whitened cross-covariances `L^{-1} b_x(S)` of every candidate
/// and `L^{-1} b_y(S)` of every prediction location as one row per selected
/// point. Selecting ground-set element `s` appends a Cholesky row equal to
/// the whitened column of `s`, so each round costs `O(|S| (n_c + n_o))` for
/// the new rows plus `O(n_c n_o)` for the gains when the residual
/// `phi(x, y) - R_xy` fits in [`RESIDUAL_CACHE_LIMIT`].
pub struct GroundSetSweep<'a> {
    model: CovarianceModel,
    omega: &'a [Point],
    ground: &'a [Point],
    cand_rows: Vec<Vec<f64>>,
    omega_rows: Vec<Vec<f64>>,
    cond_var: Vec<f64>,
    residual: Option<Vec<f64>>,
}

impl<'a> GroundSetSweep<'a> {
    pub fn new(model: &CovarianceModel, omega: &'a [Point], ground: &'a [Point]) -> Result<Self> {
        Self::with_cache_limit(model, omega, ground, RESIDUAL_CACHE_LIMIT)
    }

    pub fn with_cache_limit(
        model: &CovarianceModel,
        omega: &'a [Point],
        ground: &'a [Point],
        cache_limit: usize,
    ) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::EmptyOmega);
        }
        if ground.is_empty() {
            return Err(Error::EmptyGroundSet);
        }
        let dim = common_dim(omega)?.expect("non-empty");
        for p in ground {
            check_dim(dim, p)?;
        }
        let n_o = omega.len();
        let residual = ground.len().checked_mul(n_o).filter(|&n| n <= cache_limit).map(|n| {
            let mut r = vec![0.0; n];
            r.par_chunks_mut(n_o).zip(ground.par_iter()).for_each(|(row, x)| {
                for (v, y) in row.iter_mut().zip(omega) {
                    *v = model.kernel(x, y);
                }
            });
            r
        });
        Ok(GroundSetSweep {
            model: *model,
            omega,
            ground,
            cand_rows: Vec::new(),
            omega_rows: Vec::new(),
            cond_var: vec![model.measurement_variance(); ground.len()],
            residual,
        })
    }

    pub fn selected_count(&self) -> usize {
        self.cand_rows.len()
    }

    /// `f(S + x) - f(S)` for every ground-set element, in order.
    pub fn gains(&self) -> Vec<f64> {
        let n_o = self.omega.len();
        match &self.residual {
            Some(res) => res
                .par_chunks(n_o)
                .zip(self.cond_var.par_iter())
                .map(|(row, v)| row.iter().map(|r| r * r).sum::<f64>() / v)
                .collect(),
            None => {
                let mut out = vec![0.0; self.ground.len()];
                out.par_chunks_mut(BLOCK).enumerate().for_each(|(b, chunk)| {
                    let first = b * BLOCK;
                    let mut row = vec![0.0; n_o];
                    for (k, g) in chunk.iter_mut().enumerate() {
                        let j = first + k;
                        let x = &self.ground[j];
                        for (v, y) in row.iter_mut().zip(self.omega) {
                            *v = self.model.kernel(x, y);
                        }
                        for (w, u) in self.cand_rows.iter().zip(&self.omega_rows) {
                            let wj = w[j];
                            for (v, uy) in row.iter_mut().zip(u) {
                                *v -= wj * uy;
                            }
                        }
                        *g = row.iter().map(|r| r * r).sum::<f64>() / self.cond_var[j];
                    }
                });
                out
            }
        }
    }

    /// Adds ground-set element `s` to the selection and returns its gain.
    pub fn select(&mut self, s: usize) -> Result<f64> {
        let x = self.ground.get(s).ok_or_else(|| {
            Error::Precondition(format!("ground-set index {s} out of range ({})", self.ground.len()))
        })?;
        let denom = self.cond_var[s];
        if denom.is_nan() || denom <= 0.0 {
            return Err(Error::Numerical(format!(
                "non-positive conditional variance {denom:e} at ground-set index {s}"
            )));
        }
        let diag = denom.sqrt();
        let link: Vec<f64> = self.cand_rows.iter().map(|w| w[s]).collect();

        let new_cand = whitened_row(&self.model, x, self.ground, &link, &self.cand_rows, diag);
        let new_omega = whitened_row(&self.model, x, self.omega, &link, &self.omega_rows, diag);

        for (v, w) in self.cond_var.iter_mut().zip(&new_cand) {
            *v -= w * w;
        }
        if let Some(res) = &mut self.residual {
            let n_o = self.omega.len();
            res.par_chunks_mut(n_o).zip(new_cand.par_iter()).for_each(|(row, &w)| {
                for (r, u) in row.iter_mut().zip(&new_omega) {
                    *r -= w * u;
                }
            });
        }
        let gain = new_omega.iter().map(|u| u * u).sum();
        self.cand_rows.push(new_cand);
        self.omega_rows.push(new_omega);
        Ok(gain)
    }
}

/// Next whitened row for `targets` after appending `x`, whose factor row is
/// `[link, diag]`.
fn whitened_row(
    model: &CovarianceModel,
    x: &Point,
    targets: &[Point],
    link: &[f64],
    rows: &[Vec<f64>],
    diag: f64,
) -> Vec<f64> {
    let mut out = vec![0.0; targets.len()];
    out.par_chunks_mut(1024).enumerate().for_each(|(b, chunk)| {
        let first = b * 1024;
        for (k, v) in chunk.iter_mut().enumerate() {
            *v = model.kernel(x, &targets[first + k]);
        }
        let len = chunk.len();
        for (l, row) in link.iter().zip(rows) {
            for (v, r) in chunk.iter_mut().zip(&row[first..first + len]) {
                *v -= l * r;
            }
        }
        for v in chunk.iter_mut() {
            *v /= diag;
        }
    });
    out
}
