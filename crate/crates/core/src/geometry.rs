//! Grid discretization, the prediction graph and greedy maximal cliques.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{common_dim, CovarianceModel, Point, Region};
use crate::error::{Error, Result};

/// Largest grid [`make_grid`] will materialize.
pub const MAX_GRID_POINTS: usize = 1 << 26;

/// Uniform grid with `rho` points per axis over a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rho: usize,
    pub region: Region,
}

impl GridSpec {
    pub fn new(rho: usize, region: Region) -> Result<Self> {
        if rho == 0 {
            return Err(Error::Precondition("grid resolution must be at least 1".into()));
        }
        Ok(GridSpec { rho, region })
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    /// `rho^d`, or an error if it exceeds [`MAX_GRID_POINTS`].
    pub fn size(&self) -> Result<usize> {
        let too_large = || Error::GridTooLarge {
            rho: self.rho,
            dim: self.dim(),
            limit: MAX_GRID_POINTS,
        };
        let d = u32::try_from(self.dim()).map_err(|_| too_large())?;
        match self.rho.checked_pow(d) {
            Some(n) if n <= MAX_GRID_POINTS => Ok(n),
            _ => Err(too_large()),
        }
    }
}

/// Smallest `rho` with `rho^d >= 2 |Omega|`, so the grid is at least as large
/// as the centroid ground set can get. In two dimensions this is
/// `ceil(sqrt(2 |Omega|))`.
pub fn matched_resolution(n_pred: usize, dim: usize) -> usize {
    let target = 2 * n_pred.max(1);
    let d = dim.max(1) as u32;
    let mut rho = (target as f64).powf(1.0 / d as f64).floor().max(1.0) as usize;
    while rho.saturating_pow(d) < target {
        rho += 1;
    }
    while rho > 1 && (rho - 1).saturating_pow(d) >= target {
        rho -= 1;
    }
    rho
}

/// Grid points in row-major order (last axis varies fastest). Each axis
/// carries `rho` equally spaced values including both endpoints; `rho = 1`
/// yields the region center.
pub fn make_grid(spec: &GridSpec) -> Result<Vec<Point>> {
    let total = spec.size()?;
    let d = spec.dim();
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let lo = spec.region.lo().coords()[i];
            let hi = spec.region.hi().coords()[i];
            if spec.rho == 1 {
                vec![0.5 * (lo + hi)]
            } else {
                let step = (hi - lo) / (spec.rho - 1) as f64;
                (0..spec.rho)
                    .map(|k| if k + 1 == spec.rho { hi } else { lo + step * k as f64 })
                    .collect()
            }
        })
        .collect();

    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        out.push(Point::new(idx.iter().zip(&axes).map(|(&k, a)| a[k]).collect())?);
        for axis in (0..d).rev() {
            idx[axis] += 1;
            if idx[axis] < spec.rho {
                break;
            }
            idx[axis] = 0;
        }
    }
    Ok(out)
}

/// Undirected graph over prediction locations; vertices `i` and `j` are
/// adjacent iff `||omega_i - omega_j|| <= sqrt(2) L`.
#[derive(Debug, Clone)]
pub struct PredictionGraph {
    vertices: Vec<Point>,
    words: usize,
    adjacency: Vec<u64>,
}

impl PredictionGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.adjacency[i * self.words..(i + 1) * self.words]
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.row(i)[j / 64] >> (j % 64) & 1 == 1
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.len()).map(|i| self.degree(i)).sum::<usize>() / 2
    }
}

pub fn build_graph(model: &CovarianceModel, omega: &[Point]) -> Result<PredictionGraph> {
    if omega.is_empty() {
        return Err(Error::EmptyOmega);
    }
    common_dim(omega)?;
    let n = omega.len();
    let words = n.div_ceil(64);
    let threshold = model.clique_threshold();
    let sq_threshold = threshold * threshold;
    let mut adjacency = vec![0u64; n * words];
    adjacency
        .par_chunks_mut(words)
        .enumerate()
        .for_each(|(i, row)| {
            for (j, q) in omega.iter().enumerate() {
                if i != j && omega[i].sq_dist(q) <= sq_threshold {
                    row[j / 64] |= 1 << (j % 64);
                }
            }
        });
    Ok(PredictionGraph {
        vertices: omega.to_vec(),
        words,
        adjacency,
    })
}

/// Sorted vertex indices of a clique.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Clique(Vec<usize>);

impl Clique {
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Clique(members)
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_clique(&self, graph: &PredictionGraph) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(a, &i)| self.0[a + 1..].iter().all(|&j| graph.adjacent(i, j)))
    }

    /// No vertex outside the clique is adjacent to every member.
    pub fn is_maximal(&self, graph: &PredictionGraph) -> bool {
        (0..graph.len())
            .filter(|v| self.0.binary_search(v).is_err())
            .all(|v| self.0.iter().any(|&m| !graph.adjacent(v, m)))
    }
}

/// Grows one clique per seed vertex: starting from `{v}`, scans the other
/// vertices in ascending index order and admits each one adjacent to every
/// current member. Duplicate cliques are dropped, keeping first-seen order.
pub fn greedy_maximal_cliques(graph: &PredictionGraph) -> Vec<Clique> {
    let n = graph.len();
    let grown: Vec<Clique> = (0..n)
        .into_par_iter()
        .map(|seed| {
            // `common` holds the vertices adjacent to every member so far.
            let mut common = graph.row(seed).to_vec();
            let mut members = vec![seed];
            for u in 0..n {
                if u != seed && common[u / 64] >> (u % 64) & 1 == 1 {
                    members.push(u);
                    for (c, r) in common.iter_mut().zip(graph.row(u)) {
                        *c &= r;
                    }
                }
            }
            Clique::new(members)
        })
        .collect();

    let mut seen = HashSet::with_capacity(n);
    grown.into_iter().filter(|c| seen.insert(c.clone())).collect()
}

/// Centroid of each clique, with near-coincident centroids merged.
pub fn clique_centroids(omega: &[Point], cliques: &[Clique]) -> Vec<Point> {
    let centroids: Vec<Point> = cliques
        .iter()
        .filter_map(|c| Point::centroid(c.members().iter().map(|&i| &omega[i])))
        .collect();
    dedup_points(centroids, DEDUP_TOLERANCE)
}

/// Points closer than this (meters) are treated as the same ground-set entry.
pub const DEDUP_TOLERANCE: f64 = 1e-9;

/// Drops every point within `tol` of an earlier one, preserving order.
pub fn dedup_points(points: Vec<Point>, tol: f64) -> Vec<Point> {
    let sq = tol * tol;
    let mut kept: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        if !kept.iter().any(|q| q.sq_dist(&p) < sq) {
            kept.push(p);
        }
    }
    kept
}
