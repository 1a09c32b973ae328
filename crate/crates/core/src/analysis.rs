//! Structural checks and exhaustive oracles: subset enumeration, dense 1-D
//! search for two prediction points, the midpoint threshold, the endpoint
//! ratio bound and the non-submodularity counterexample.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::covariance::{CovarianceModel, Point, Region};
use crate::error::{Error, Result};
use crate::estimation::{marginal_gain_sweep, objective, SelectionState};
use crate::selection::{greedy_select, ProblemInstance};

/// Largest number of subsets [`brute_force_subsets`] will enumerate.
pub const MAX_SUBSETS: u128 = 1_000_000;

/// Default number of dense-search points over `[y1, y2]`.
pub const DEFAULT_RESOLUTION: usize = 100_001;

/// Lower bound on `f({y1}) / f({x*})` for two points farther apart than
/// `sqrt(2) L`: `1 / (1 + e^{-1/2})`.
pub fn endpoint_ratio_bound() -> f64 {
    1.0 / (1.0 + (-0.5f64).exp())
}

/// Two prediction locations on the real line with one measurement to place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneDTwoPointCase {
    y1: f64,
    y2: f64,
    model: CovarianceModel,
}

impl OneDTwoPointCase {
    pub fn new(y1: f64, y2: f64, model: CovarianceModel) -> Result<Self> {
        if !(y1.is_finite() && y2.is_finite() && y1 < y2) {
            return Err(Error::Precondition(format!("need y1 < y2, got {y1} and {y2}")));
        }
        Ok(OneDTwoPointCase { y1, y2, model })
    }

    pub fn y1(&self) -> f64 {
        self.y1
    }

    pub fn y2(&self) -> f64 {
        self.y2
    }

    pub fn model(&self) -> &CovarianceModel {
        &self.model
    }

    pub fn separation(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.y1 + self.y2)
    }

    /// Single-measurement objective `(phi(x - y1)^2 + phi(x - y2)^2) / (sigma0^2 + noise)`.
    pub fn value_at(&self, x: f64) -> f64 {
        let m = &self.model;
        let a = m.cov_from_sq_dist((x - self.y1) * (x - self.y1));
        let b = m.cov_from_sq_dist((x - self.y2) * (x - self.y2));
        (a * a + b * b) / m.measurement_variance()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub best_set: Vec<Point>,
    pub best_value: f64,
    pub evaluations: u64,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u128::MAX / (n as u128 + 1) {
            return u128::MAX;
        }
    }
    acc
}

/// Exact maximum of `f` over all `k`-subsets of `ground_set` without repeats.
/// Ties keep the lexicographically first subset.
pub fn brute_force_subsets(instance: &ProblemInstance, ground_set: &[Point], k: usize) -> Result<OracleResult> {
    let n = ground_set.len();
    if n == 0 {
        return Err(Error::EmptyGroundSet);
    }
    if k == 0 || k > n {
        return Err(Error::Precondition(format!("subset size {k} must lie in 1..={n}")));
    }
    let count = binomial(n, k);
    if count > MAX_SUBSETS {
        return Err(Error::TooManySubsets {
            count,
            limit: MAX_SUBSETS,
        });
    }

    let mut idx: Vec<usize> = (0..k).collect();
    let mut best_idx = idx.clone();
    let mut best_value = f64::NEG_INFINITY;
    let mut evaluations = 0u64;
    let mut subset = Vec::with_capacity(k);
    loop {
        subset.clear();
        subset.extend(idx.iter().map(|&i| ground_set[i].clone()));
        let v = objective(&instance.model, &instance.omega, &subset)?;
        evaluations += 1;
        if v > best_value {
            best_value = v;
            best_idx.clone_from(&idx);
        }
        // Advance to the next combination in lexicographic order.
        let Some(pos) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            break;
        };
        idx[pos] += 1;
        for i in pos + 1..k {
            idx[i] = idx[i - 1] + 1;
        }
    }
    Ok(OracleResult {
        best_set: best_idx.iter().map(|&i| ground_set[i].clone()).collect(),
        best_value,
        evaluations,
    })
}

/// Maximizes the single-measurement objective over `resolution` evenly spaced
/// points of `[y1, y2]`, which contains every maximizer. Ties keep the
/// leftmost point.
pub fn dense_line_search(case: &OneDTwoPointCase, resolution: usize) -> Result<OracleResult> {
    let (x, v) = line_argmax(case, resolution)?;
    Ok(OracleResult {
        best_set: vec![Point::scalar(x)],
        best_value: v,
        evaluations: resolution as u64,
    })
}

fn line_argmax(case: &OneDTwoPointCase, resolution: usize) -> Result<(f64, f64)> {
    if resolution < 1000 {
        return Err(Error::Precondition(format!(
            "dense search needs at least 1000 points, got {resolution}"
        )));
    }
    let step = case.separation() / (resolution - 1) as f64;
    let mut best = (case.y1, f64::NEG_INFINITY);
    for i in 0..resolution {
        let x = if i + 1 == resolution { case.y2 } else { case.y1 + step * i as f64 };
        let v = case.value_at(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

/// Grid step of a dense search.
pub fn search_step(case: &OneDTwoPointCase, resolution: usize) -> f64 {
    case.separation() / (resolution.max(2) - 1) as f64
}

/// Whether the dense-search maximizer lies within two grid steps of the
/// midpoint.
pub fn check_midpoint_criterion(case: &OneDTwoPointCase, resolution: usize) -> Result<bool> {
    let (x, _) = line_argmax(case, resolution)?;
    Ok((x - case.midpoint()).abs() <= 2.0 * search_step(case, resolution))
}

/// `f({y1}) / f({x*})` with `x*` from dense search. Requires the points to be
/// farther apart than `sqrt(2) L`.
pub fn check_endpoint_ratio(case: &OneDTwoPointCase, resolution: usize) -> Result<f64> {
    if case.separation() <= case.model.clique_threshold() {
        return Err(Error::Precondition(format!(
            "separation {} does not exceed sqrt(2) L = {}",
            case.separation(),
            case.model.clique_threshold()
        )));
    }
    let (_, best) = line_argmax(case, resolution)?;
    Ok(case.value_at(case.y1) / best)
}

/// Gains of adding `x` to `a` and to `b` against prediction set `omega`.
pub fn gain_pair(
    model: &CovarianceModel,
    omega: &[Point],
    a: &[Point],
    b: &[Point],
    x: &Point,
) -> Result<(f64, f64)> {
    let sa = SelectionState::from_points(*model, omega.to_vec(), a)?;
    let sb = SelectionState::from_points(*model, omega.to_vec(), b)?;
    Ok((sa.marginal_gain(x)?, sb.marginal_gain(x)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Example1 {
    pub gain_a: f64,
    pub gain_b: f64,
}

impl Example1 {
    /// A subset gaining less than its superset contradicts diminishing returns.
    pub fn violates_submodularity(&self) -> bool {
        self.gain_a < self.gain_b
    }
}

/// One prediction point at 0, unit kernel and noise, `A = {0.6784}`,
/// `B = {0.6784, 1.4869}`, candidate `x = 0.6892`.
pub fn reproduce_example1() -> Result<Example1> {
    let model = CovarianceModel::new(1.0, 1.0, 1.0)?;
    let p = Point::scalar;
    let (gain_a, gain_b) = gain_pair(
        &model,
        &[p(0.0)],
        &[p(0.6784)],
        &[p(0.6784), p(1.4869)],
        &p(0.6892),
    )?;
    Ok(Example1 { gain_a, gain_b })
}

// ---------------------------------------------------------------------------
// Randomized sweeps

#[derive(Debug, Clone, Serialize)]
pub struct GainEquivalenceSummary {
    pub cases: usize,
    pub failures: usize,
    pub max_rel_error: f64,
}

/// Incremental marginal gain against the direct objective difference on
/// random 1-D and 2-D instances with `|S| <= 50` and `|Omega| <= 200`.
pub fn gain_equivalence_sweep(cases: usize, seed: u64, tol: f64) -> Result<GainEquivalenceSummary> {
    let errors: Vec<f64> = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let dim = rng.random_range(1..=2usize);
            let model = CovarianceModel::new(
                rng.random_range(0.5..3.0),
                rng.random_range(0.3..4.0),
                rng.random_range(0.01..1.0),
            )?;
            let side = 10.0;
            let point = |rng: &mut ChaCha8Rng| {
                Point::new((0..dim).map(|_| rng.random_range(0.0..side)).collect()).expect("finite")
            };
            let n_omega = rng.random_range(1..=200usize);
            let omega: Vec<Point> = (0..n_omega).map(|_| point(&mut rng)).collect();
            let n_set = rng.random_range(0..=50usize);
            let mut set: Vec<Point> = Vec::with_capacity(n_set);
            for _ in 0..n_set {
                if !set.is_empty() && rng.random_bool(0.1) {
                    let j = rng.random_range(0..set.len());
                    set.push(set[j].clone());
                } else {
                    set.push(point(&mut rng));
                }
            }
            let x = if !set.is_empty() && rng.random_bool(0.2) {
                set[rng.random_range(0..set.len())].clone()
            } else {
                point(&mut rng)
            };

            let state = SelectionState::from_points(model, omega.clone(), &set)?;
            let incremental = marginal_gain_sweep(&state, std::slice::from_ref(&x))?[0];
            let before = objective(&model, &omega, &set)?;
            let mut grown = set.clone();
            grown.push(x);
            let after = objective(&model, &omega, &grown)?;
            Ok((incremental - (after - before)).abs() / after.max(1.0))
        })
        .collect::<Result<_>>()?;
    Ok(GainEquivalenceSummary {
        cases,
        failures: errors.iter().filter(|&&e| e.is_nan() || e > tol).count(),
        max_rel_error: errors.iter().copied().fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdMismatch {
    pub length_scale: f64,
    pub separation: f64,
    pub midpoint_optimal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MidpointSweepSummary {
    pub cases: usize,
    /// Cases within one search step of the threshold; exempt from comparison.
    pub boundary_cases: usize,
    pub mismatches: Vec<ThresholdMismatch>,
}

/// Separations `3L i / per_scale` for `i = 1..=per_scale` at each length
/// scale, plus the two reference cases at `L = 1/sqrt(2)` (separations 0.9
/// and 1.1): midpoint optimality must coincide with `separation <= sqrt(2) L`.
pub fn midpoint_threshold_sweep(
    length_scales: &[f64],
    per_scale: usize,
    resolution: usize,
) -> Result<MidpointSweepSummary> {
    let mut cases = Vec::new();
    for &l in length_scales {
        for i in 1..=per_scale {
            cases.push((l, 3.0 * l * i as f64 / per_scale as f64));
        }
    }
    cases.push((std::f64::consts::FRAC_1_SQRT_2, 0.9));
    cases.push((std::f64::consts::FRAC_1_SQRT_2, 1.1));

    let outcomes: Vec<(f64, f64, bool, bool)> = cases
        .par_iter()
        .map(|&(l, sep)| {
            let case = OneDTwoPointCase::new(0.0, sep, CovarianceModel::new(1.0, l, 1.0)?)?;
            let optimal = check_midpoint_criterion(&case, resolution)?;
            let boundary = (sep - case.model.clique_threshold()).abs() <= search_step(&case, resolution);
            Ok((l, sep, optimal, boundary))
        })
        .collect::<Result<_>>()?;

    let boundary_cases = outcomes.iter().filter(|o| o.3).count();
    let mismatches = outcomes
        .iter()
        .filter(|&&(l, sep, optimal, boundary)| {
            !boundary && optimal != (sep <= std::f64::consts::SQRT_2 * l)
        })
        .map(|&(l, sep, optimal, _)| ThresholdMismatch {
            length_scale: l,
            separation: sep,
            midpoint_optimal: optimal,
        })
        .collect();
    Ok(MidpointSweepSummary {
        cases: outcomes.len(),
        boundary_cases,
        mismatches,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioSweepSummary {
    pub cases: usize,
    pub min_ratio: f64,
    pub min_case_separation_over_l: f64,
}

/// Endpoint ratio on random cases with separation in `(sqrt(2) L, 10 L]`.
pub fn endpoint_ratio_sweep(cases: usize, resolution: usize, seed: u64) -> Result<RatioSweepSummary> {
    let ratios: Vec<(f64, f64)> = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let l = rng.random_range(0.2..10.0);
            let model = CovarianceModel::new(rng.random_range(0.5..15.0), l, rng.random_range(0.01..2.0))?;
            let lo = std::f64::consts::SQRT_2 * l;
            // Open at the threshold, closed at 10 L.
            let sep = lo + (10.0 * l - lo) * (1.0 - rng.random::<f64>());
            let y1 = rng.random_range(-50.0..50.0);
            let case = OneDTwoPointCase::new(y1, y1 + sep, model)?;
            Ok((check_endpoint_ratio(&case, resolution)?, case.separation() / l))
        })
        .collect::<Result<_>>()?;
    let (min_ratio, at) = ratios
        .iter()
        .copied()
        .fold((f64::INFINITY, f64::NAN), |acc, r| if r.0 < acc.0 { r } else { acc });
    Ok(RatioSweepSummary {
        cases,
        min_ratio,
        min_case_separation_over_l: at,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleQualitySummary {
    pub instances: usize,
    /// Instances where greedy beat the simple-subset optimum.
    pub exceeded: usize,
    /// Instances with greedy / optimum >= 0.9.
    pub within_90: usize,
    pub ratios: Vec<f64>,
}

/// Greedy against exhaustive search on random instances with at most ten
/// candidates and a budget of at most three.
pub fn oracle_quality_sweep(instances: usize, seed: u64) -> Result<OracleQualitySummary> {
    let region = Region::square(40.0)?;
    let model = CovarianceModel::SURVEY;
    let ratios: Vec<(f64, bool)> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let point = |rng: &mut ChaCha8Rng| Point::xy(rng.random_range(0.0..40.0), rng.random_range(0.0..40.0));
            let n_omega = rng.random_range(3..=15usize);
            let omega: Vec<Point> = (0..n_omega).map(|_| point(&mut rng)).collect();
            let n_ground = rng.random_range(3..=10usize);
            let ground: Vec<Point> = (0..n_ground).map(|_| point(&mut rng)).collect();
            let k = rng.random_range(1..=3usize);
            let instance = ProblemInstance::new(region.clone(), omega, k, model)?;
            let greedy = greedy_select(&instance, &ground)?;
            let oracle = brute_force_subsets(&instance, &ground, k)?;
            let exceeded = greedy.objective > oracle.best_value * (1.0 + 1e-12);
            Ok((greedy.objective / oracle.best_value, exceeded))
        })
        .collect::<Result<_>>()?;
    Ok(OracleQualitySummary {
        instances,
        exceeded: ratios.iter().filter(|r| r.1).count(),
        within_90: ratios.iter().filter(|r| r.0 >= 0.9).count(),
        ratios: ratios.into_iter().map(|r| r.0).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn case(sep: f64, l: f64) -> OneDTwoPointCase {
        OneDTwoPointCase::new(0.0, sep, CovarianceModel::new(1.0, l, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn ratio_bound_value() {
        assert!((endpoint_ratio_bound() - 0.6225).abs() < 1e-4);
    }

    #[test]
    fn case_requires_ordered_points() {
        let m = CovarianceModel::new(1.0, 1.0, 1.0).unwrap();
        assert!(OneDTwoPointCase::new(1.0, 1.0, m).is_err());
        assert!(OneDTwoPointCase::new(2.0, 1.0, m).is_err());
    }

    #[test]
    fn reference_cases() {
        let near = dense_line_search(&case(0.9, FRAC_1_SQRT_2), DEFAULT_RESOLUTION).unwrap();
        assert!((near.best_set[0].coords()[0] - 0.45).abs() <= 0.9 / 1e5);
        assert!(check_midpoint_criterion(&case(0.9, FRAC_1_SQRT_2), DEFAULT_RESOLUTION).unwrap());

        let far = case(1.1, FRAC_1_SQRT_2);
        let best = dense_line_search(&far, DEFAULT_RESOLUTION).unwrap();
        assert!((best.best_set[0].coords()[0] - 0.55).abs() > 0.05);
        // Midpoint is a local minimum: both neighbors are higher.
        let h = 1e-3;
        assert!(far.value_at(0.55 - h) > far.value_at(0.55));
        assert!(far.value_at(0.55 + h) > far.value_at(0.55));
        assert!(!check_midpoint_criterion(&far, DEFAULT_RESOLUTION).unwrap());
    }

    #[test]
    fn boundary_midpoint_attains_maximum() {
        let c = case(SQRT_2, 1.0);
        let best = dense_line_search(&c, 1_000_001).unwrap();
        let mid = c.value_at(c.midpoint());
        assert!(best.best_value - mid <= 1e-15 * mid);
    }

    #[test]
    fn threshold_neighbourhood() {
        for l in [0.5, FRAC_1_SQRT_2, 8.33] {
            let t = SQRT_2 * l;
            assert!(check_midpoint_criterion(&case(t * (1.0 - 1e-3), l), 1_000_001).unwrap());
            assert!(!check_midpoint_criterion(&case(t * (1.0 + 1e-3), l), 1_000_001).unwrap());
        }
    }

    #[test]
    fn endpoint_ratio_cases() {
        let r = check_endpoint_ratio(&case(100.0, 1.0), DEFAULT_RESOLUTION).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let r = check_endpoint_ratio(&case(SQRT_2 * 1.0001, 1.0), DEFAULT_RESOLUTION).unwrap();
        assert!(r >= endpoint_ratio_bound());
        assert!(matches!(
            check_endpoint_ratio(&case(1.0, 1.0), DEFAULT_RESOLUTION),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn dense_search_rejects_coarse_resolution() {
        assert!(dense_line_search(&case(1.0, 1.0), 999).is_err());
    }

    #[test]
    fn example_one() {
        let e = reproduce_example1().unwrap();
        assert!((e.gain_a - 0.1021).abs() < 5e-4);
        assert!((e.gain_b - 0.1025).abs() < 5e-4);
        assert!(e.violates_submodularity());
        let swapped = Example1 {
            gain_a: e.gain_b,
            gain_b: e.gain_a,
        };
        assert!(!swapped.violates_submodularity());
    }

    #[test]
    fn example_one_is_scale_free() {
        let base = reproduce_example1().unwrap();
        for scale in [0.37, 8.33, 120.0] {
            let model = CovarianceModel::new(1.0, scale, 1.0).unwrap();
            let p = |x: f64| Point::scalar(x * scale);
            let (a, b) = gain_pair(&model, &[p(0.0)], &[p(0.6784)], &[p(0.6784), p(1.4869)], &p(0.6892)).unwrap();
            assert!((a - base.gain_a).abs() < 1e-12);
            assert!((b - base.gain_b).abs() < 1e-12);
        }
    }

    #[test]
    fn binomial_guard() {
        assert_eq!(binomial(6, 2), 15);
        assert_eq!(binomial(10, 3), 120);
        assert_eq!(binomial(3, 5), 0);
        let inst = ProblemInstance::new(
            Region::interval(0.0, 100.0).unwrap(),
            vec![Point::scalar(1.0)],
            1,
            CovarianceModel::new(1.0, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        let ground: Vec<Point> = (0..100).map(|i| Point::scalar(i as f64)).collect();
        assert!(matches!(
            brute_force_subsets(&inst, &ground, 10),
            Err(Error::TooManySubsets { .. })
        ));
    }
}
