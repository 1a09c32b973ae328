//! Squared-exponential covariance and the point/region types it is evaluated on.
//!
//! Every covariance value in the crate is produced by [`CovarianceModel`], which
//! carries the kernel amplitude `sigma0`, the length scale `L` and the
//! measurement noise variance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernel hyperparameters plus measurement noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct CovarianceModel {
    sigma0: f64,
    length_scale: f64,
    noise_var: f64,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    sigma0: f64,
    length_scale: f64,
    noise_var: f64,
}

impl TryFrom<RawModel> for CovarianceModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        CovarianceModel::new(raw.sigma0, raw.length_scale, raw.noise_var)
    }
}

impl From<CovarianceModel> for RawModel {
    fn from(m: CovarianceModel) -> Self {
        RawModel {
            sigma0: m.sigma0,
            length_scale: m.length_scale,
            noise_var: m.noise_var,
        }
    }
}

impl CovarianceModel {
    /// Field parameters fitted to the organic-matter survey used in the
    /// benchmark suite: `sigma0 = 12.87`, `L = 8.33 m`, noise variance `0.0361`.
    pub const SURVEY: CovarianceModel = CovarianceModel {
        sigma0: 12.87,
        length_scale: 8.33,
        noise_var: 0.0361,
    };

    pub fn new(sigma0: f64, length_scale: f64, noise_var: f64) -> Result<Self> {
        let check = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!("{name} must be positive and finite, got {v}")))
            }
        };
        check("sigma0", sigma0)?;
        check("length_scale", length_scale)?;
        check("noise_var", noise_var)?;
        Ok(CovarianceModel {
            sigma0,
            length_scale,
            noise_var,
        })
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Prior variance of the field, `sigma0^2`.
    pub fn prior_variance(&self) -> f64 {
        self.sigma0 * self.sigma0
    }

    /// Variance of a single noisy measurement, `sigma0^2 + noise_var`.
    pub fn measurement_variance(&self) -> f64 {
        self.prior_variance() + self.noise_var
    }

    /// Distance `sqrt(2) * L` below which (inclusive) two prediction points are
    /// best served by a single measurement at their midpoint.
    pub fn clique_threshold(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.length_scale
    }

    /// `sigma0^2 * exp(-r^2 / (2 L^2))`.
    pub fn se_cov(&self, r: f64) -> Result<f64> {
        if r.is_nan() || r < 0.0 {
            return Err(Error::NegativeDistance(r));
        }
        Ok(self.cov_from_sq_dist(r * r))
    }

    #[inline]
    pub(crate) fn cov_from_sq_dist(&self, sq: f64) -> f64 {
        self.prior_variance() * (-sq / (2.0 * self.length_scale * self.length_scale)).exp()
    }

    /// Covariance between two points of equal dimension.
    ///
    /// Callers are responsible for dimension agreement; use [`cov_vector`] for
    /// checked access.
    #[inline]
    pub fn kernel(&self, a: &Point, b: &Point) -> f64 {
        self.cov_from_sq_dist(a.sq_dist(b))
    }
}

/// A location in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint);
        }
        Ok(Point(coords))
    }

    /// One-dimensional point. Panics on non-finite input.
    pub fn scalar(x: f64) -> Self {
        Point::new(vec![x]).expect("finite coordinate")
    }

    /// Two-dimensional point. Panics on non-finite input.
    pub fn xy(x: f64, y: f64) -> Self {
        Point::new(vec![x, y]).expect("finite coordinates")
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn sq_dist(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.sq_dist(other).sqrt()
    }

    /// Arithmetic mean of a non-empty set of points.
    pub fn centroid<'a, I>(points: I) -> Option<Point>
    where
        I: IntoIterator<Item = &'a Point>,
    {
        let mut iter = points.into_iter();
        let first = iter.next()?;
        let mut sum = first.0.clone();
        let mut n = 1usize;
        for p in iter {
            for (s, c) in sum.iter_mut().zip(&p.0) {
                *s += c;
            }
            n += 1;
        }
        let inv = n as f64;
        Some(Point(sum.into_iter().map(|s| s / inv).collect()))
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

/// Axis-aligned box of admissible measurement locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    lo: Point,
    hi: Point,
}

impl Region {
    pub fn new(lo: Point, hi: Point) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return Err(Error::DimensionMismatch {
                expected: lo.dim(),
                found: hi.dim(),
            });
        }
        if lo.coords().iter().zip(hi.coords()).any(|(l, h)| l > h) {
            return Err(Error::InvalidRegion(format!(
                "lower corner {:?} exceeds upper corner {:?}",
                lo.coords(),
                hi.coords()
            )));
        }
        Ok(Region { lo, hi })
    }

    /// `[0, side]^2`.
    pub fn square(side: f64) -> Result<Self> {
        Region::new(Point::new(vec![0.0, 0.0])?, Point::new(vec![side, side])?)
    }

    /// `[lo, hi]` on the real line.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Region::new(Point::new(vec![lo])?, Point::new(vec![hi])?)
    }

    /// Smallest box containing every point.
    pub fn bounding(points: &[Point]) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyOmega)?;
        let mut lo = first.coords().to_vec();
        let mut hi = lo.clone();
        for p in points {
            check_dim(first.dim(), p)?;
            for (i, &c) in p.coords().iter().enumerate() {
                lo[i] = lo[i].min(c);
                hi[i] = hi[i].max(c);
            }
        }
        Region::new(Point::new(lo)?, Point::new(hi)?)
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn lo(&self) -> &Point {
        &self.lo
    }

    pub fn hi(&self) -> &Point {
        &self.hi
    }

    pub fn center(&self) -> Point {
        Point(
            self.lo
                .coords()
                .iter()
                .zip(self.hi.coords())
                .map(|(l, h)| 0.5 * (l + h))
                .collect(),
        )
    }

    /// Containment with an absolute slack of `tol` per axis.
    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        p.dim() == self.dim()
            && p.coords()
                .iter()
                .zip(self.lo.coords().iter().zip(self.hi.coords()))
                .all(|(c, (l, h))| *c >= l - tol && *c <= h + tol)
    }
}

pub(crate) fn check_dim(expected: usize, p: &Point) -> Result<()> {
    if p.dim() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected,
            found: p.dim(),
        })
    }
}

/// Checks that every point shares the dimension of the first one and returns it.
pub(crate) fn common_dim<'a, I>(points: I) -> Result<Option<usize>>
where
    I: IntoIterator<Item = &'a Point>,
{
    let mut dim = None;
    for p in points {
        match dim {
            None => dim = Some(p.dim()),
            Some(d) => check_dim(d, p)?,
        }
    }
    Ok(dim)
}

/// `b_x(S)`: covariances between `x` and each member of `set`, in order.
pub fn cov_vector(model: &CovarianceModel, x: &Point, set: &[Point]) -> Result<DVector<f64>> {
    for p in set {
        check_dim(x.dim(), p)?;
    }
    Ok(DVector::from_iterator(
        set.len(),
        set.iter().map(|p| model.kernel(x, p)),
    ))
}

/// `C(S)`: kernel matrix over `set` plus `noise_var` on the diagonal.
pub fn cov_matrix(model: &CovarianceModel, set: &[Point]) -> Result<DMatrix<f64>> {
    if set.is_empty() {
        return Err(Error::Precondition("covariance matrix of an empty set".into()));
    }
    common_dim(set)?;
    let n = set.len();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        c[(i, i)] = model.measurement_variance();
        for j in 0..i {
            let v = model.kernel(&set[i], &set[j]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> CovarianceModel {
        CovarianceModel::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn se_cov_values() {
        assert_eq!(unit().se_cov(0.0).unwrap(), 1.0);
        let survey = CovarianceModel::SURVEY;
        assert!((survey.se_cov(0.0).unwrap() - 165.6369).abs() < 1e-9);
        let v = unit().se_cov(std::f64::consts::SQRT_2).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn se_cov_rejects_negative_distance() {
        assert_eq!(unit().se_cov(-0.1), Err(Error::NegativeDistance(-0.1)));
    }

    #[test]
    fn model_rejects_non_positive_parameters() {
        assert!(CovarianceModel::new(0.0, 1.0, 1.0).is_err());
        assert!(CovarianceModel::new(1.0, -1.0, 1.0).is_err());
        assert!(CovarianceModel::new(1.0, 1.0, 0.0).is_err());
        assert!(CovarianceModel::new(f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn cov_vector_cases() {
        let m = unit();
        let s = Point::scalar(0.3);
        assert_eq!(cov_vector(&m, &s, std::slice::from_ref(&s)).unwrap()[0], 1.0);
        assert_eq!(cov_vector(&m, &s, &[]).unwrap().len(), 0);
        let v = cov_vector(&m, &Point::scalar(0.0), &[Point::scalar(0.6784)]).unwrap();
        assert!((v[0] - (-0.6784f64 * 0.6784 / 2.0).exp()).abs() < 1e-15);
        assert!(matches!(
            cov_vector(&m, &Point::scalar(0.0), &[Point::xy(0.0, 1.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cov_matrix_cases() {
        let m = unit();
        let one = cov_matrix(&m, &[Point::scalar(2.0)]).unwrap();
        assert_eq!(one[(0, 0)], 2.0);

        let dup = cov_matrix(&m, &[Point::scalar(1.0), Point::scalar(1.0)]).unwrap();
        assert_eq!(dup, DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]));

        let b = cov_matrix(&m, &[Point::scalar(0.6784), Point::scalar(1.4869)]).unwrap();
        let d: f64 = 1.4869 - 0.6784;
        assert!((b[(0, 1)] - (-d * d / 2.0).exp()).abs() < 1e-15);
        assert_eq!(b[(0, 1)], b[(1, 0)]);
    }

    #[test]
    fn region_basics() {
        let r = Region::square(40.0).unwrap();
        assert_eq!(r.center(), Point::xy(20.0, 20.0));
        assert!(r.contains(&Point::xy(40.0, 0.0), 0.0));
        assert!(!r.contains(&Point::xy(40.1, 0.0), 0.0));
        assert!(Region::new(Point::scalar(1.0), Point::scalar(0.0)).is_err());
    }

    #[test]
    fn point_rejects_non_finite() {
        assert!(Point::new(vec![f64::INFINITY]).is_err());
        assert!(Point::new(vec![]).is_err());
    }
}
