//! Variance-reduction objective and its incremental evaluation.
//!
//! For a measurement set `S` and prediction location `y`, the linear
//! least-squares estimator reduces the prior variance of `Z(y)` by
//! `f_y(S) = b_y(S)^T C(S)^{-1} b_y(S)`. The total objective sums this over
//! all prediction locations. Direct evaluation goes through a fresh Cholesky
//! factorization; [`SelectionState`] instead grows a lower-triangular factor
//! one row at a time and keeps the whitened cross-covariances
//! `U = L^{-1} [b_y(S)]_y`, so that `f(S) = ||U||_F^2` and the gain of a new
//! location `x` is
//!
//! ```text
//! f(S + x) - f(S) = T_x * sum_y (phi(x, y) - R_xy)^2
//! T_x  = 1 / (sigma0^2 + noise - |L^{-1} b_x|^2)
//! R_xy = (L^{-1} b_x) . (L^{-1} b_y)
//! ```

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;

use crate::covariance::{check_dim, common_dim, cov_matrix, cov_vector, CovarianceModel, Point};
use crate::error::{Error, Result};

/// `f_y(S)`, evaluated directly. Zero for an empty set.
pub fn variance_reduction_single(model: &CovarianceModel, y: &Point, set: &[Point]) -> Result<f64> {
    if set.is_empty() {
        return Ok(0.0);
    }
    let chol = factor(model, set)?;
    let b = cov_vector(model, y, set)?;
    Ok(whitened_norm_sq(&chol, b))
}

/// `f(S) = sum_y f_y(S)`, evaluated directly with one factorization of `C(S)`.
pub fn objective(model: &CovarianceModel, omega: &[Point], set: &[Point]) -> Result<f64> {
    if omega.is_empty() {
        return Err(Error::EmptyOmega);
    }
    let dim = common_dim(omega)?.expect("non-empty");
    if set.is_empty() {
        return Ok(0.0);
    }
    check_dim(dim, &set[0])?;
    let chol = factor(model, set)?;
    omega.iter().try_fold(0.0, |acc, y| {
        let b = cov_vector(model, y, set)?;
        Ok(acc + whitened_norm_sq(&chol, b))
    })
}

/// A-priori total mean-squared error `|Omega| sigma0^2 - f(S)`.
pub fn total_mse(model: &CovarianceModel, omega: &[Point], set: &[Point]) -> Result<f64> {
    Ok(omega.len() as f64 * model.prior_variance() - objective(model, omega, set)?)
}

fn factor(model: &CovarianceModel, set: &[Point]) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(cov_matrix(model, set)?)
        .ok_or_else(|| Error::Numerical("covariance matrix is not positive definite".into()))
}

fn whitened_norm_sq(chol: &Cholesky<f64, nalgebra::Dyn>, b: DVector<f64>) -> f64 {
    let w = chol
        .l_dirty()
        .solve_lower_triangular(&b)
        .expect("Cholesky factor has a positive diagonal");
    w.norm_squared()
}

/// The two ingredients of the closed-form marginal gain for one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalGainTerms {
    /// Inverse of the candidate's posterior variance plus measurement noise.
    pub t_x: f64,
    /// `R_xy` for every prediction location, in prediction-set order.
    pub r_xy: Vec<f64>,
}

/// Measurement set with a cached Cholesky factor of `C(S)` and whitened
/// cross-covariances to the prediction set.
#[derive(Debug, Clone)]
pub struct SelectionState {
    model: CovarianceModel,
    omega: Arc<[Point]>,
    points: Vec<Point>,
    chol: DMatrix<f64>,
    whitened_omega: DMatrix<f64>,
    objective: f64,
}

impl SelectionState {
    /// State for `S = {}`.
    pub fn empty(model: CovarianceModel, omega: impl Into<Arc<[Point]>>) -> Result<Self> {
        let omega = omega.into();
        if omega.is_empty() {
            return Err(Error::EmptyOmega);
        }
        common_dim(omega.iter())?;
        let n = omega.len();
        Ok(SelectionState {
            model,
            omega,
            points: Vec::new(),
            chol: DMatrix::zeros(0, 0),
            whitened_omega: DMatrix::zeros(0, n),
            objective: 0.0,
        })
    }

    /// Builds a state by appending `points` one at a time.
    pub fn from_points(
        model: CovarianceModel,
        omega: impl Into<Arc<[Point]>>,
        points: &[Point],
    ) -> Result<Self> {
        let mut state = Self::empty(model, omega)?;
        for p in points {
            state.push(p.clone())?;
        }
        Ok(state)
    }

    pub fn model(&self) -> &CovarianceModel {
        &self.model
    }

    pub fn omega(&self) -> &[Point] {
        &self.omega
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Lower-triangular `L` with `L L^T = C(S)`.
    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// `L^{-1} b_y(S)` as columns, one per prediction location.
    pub fn whitened_omega(&self) -> &DMatrix<f64> {
        &self.whitened_omega
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn total_mse(&self) -> f64 {
        self.omega.len() as f64 * self.model.prior_variance() - self.objective
    }

    fn dim(&self) -> usize {
        self.omega[0].dim()
    }

    /// `L^{-1} b_x(S)` and the posterior variance plus noise of `x`.
    fn whiten(&self, x: &Point) -> Result<(DVector<f64>, f64)> {
        check_dim(self.dim(), x)?;
        let b = DVector::from_iterator(self.points.len(), self.points.iter().map(|p| self.model.kernel(x, p)));
        let w = self
            .chol
            .solve_lower_triangular(&b)
            .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
        let denom = self.model.measurement_variance() - w.norm_squared();
        if denom.is_nan() || denom <= 0.0 {
            return Err(Error::Numerical(format!(
                "non-positive conditional variance {denom:e} for candidate {:?}",
                x.coords()
            )));
        }
        Ok((w, denom))
    }

    /// `T_x` and `R_xy` for a candidate location.
    pub fn gain_terms(&self, x: &Point) -> Result<MarginalGainTerms> {
        let (w, denom) = self.whiten(x)?;
        let r_xy = self.whitened_omega.tr_mul(&w);
        Ok(MarginalGainTerms {
            t_x: 1.0 / denom,
            r_xy: r_xy.iter().copied().collect(),
        })
    }

    /// `f(S + x) - f(S)` via the closed form.
    pub fn marginal_gain(&self, x: &Point) -> Result<f64> {
        let (w, denom) = self.whiten(x)?;
        let m = self.points.len();
        let mut acc = 0.0;
        for (j, y) in self.omega.iter().enumerate() {
            let r = if m == 0 {
                0.0
            } else {
                self.whitened_omega.column(j).dot(&w)
            };
            let resid = self.model.kernel(x, y) - r;
            acc += resid * resid;
        }
        Ok(acc / denom)
    }

    /// Appends `x` in place: one new factor row, one new whitened row.
    pub fn push(&mut self, x: Point) -> Result<f64> {
        let (w, denom) = self.whiten(&x)?;
        let m = self.points.len();
        let diag = denom.sqrt();

        let mut chol = std::mem::replace(&mut self.chol, DMatrix::zeros(0, 0)).resize(m + 1, m + 1, 0.0);
        for i in 0..m {
            chol[(m, i)] = w[i];
        }
        chol[(m, m)] = diag;
        self.chol = chol;

        let n = self.omega.len();
        let mut new_row = Vec::with_capacity(n);
        let mut gain = 0.0;
        for (j, y) in self.omega.iter().enumerate() {
            let r = if m == 0 {
                0.0
            } else {
                self.whitened_omega.column(j).dot(&w)
            };
            let u = (self.model.kernel(&x, y) - r) / diag;
            gain += u * u;
            new_row.push(u);
        }
        let mut whitened =
            std::mem::replace(&mut self.whitened_omega, DMatrix::zeros(0, 0)).resize_vertically(m + 1, 0.0);
        for (j, u) in new_row.into_iter().enumerate() {
            whitened[(m, j)] = u;
        }
        self.whitened_omega = whitened;
        self.points.push(x);
        self.objective += gain;
        Ok(gain)
    }

    /// New state over `S + x`; `self` is left untouched.
    pub fn extend(&self, x: Point) -> Result<SelectionState> {
        let mut next = self.clone();
        next.push(x)?;
        Ok(next)
    }
}

/// Marginal gain of each candidate against the current state, in candidate
/// order. Candidates are evaluated independently and in parallel.
pub fn marginal_gain_sweep(state: &SelectionState, candidates: &[Point]) -> Result<Vec<f64>> {
    if candidates.is_empty() {
        return Err(Error::EmptyGroundSet);
    }
    candidates
        .par_iter()
        .map(|x| state.marginal_gain(x))
        .collect()
}
