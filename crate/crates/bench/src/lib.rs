//! Fixtures shared by the criterion benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spatial_select::{CovarianceModel, Point, ProblemInstance, Region};

/// `n_pred` uniform points in `[0, side]^2` with the survey covariance model.
pub fn square_instance(side: f64, n_pred: usize, budget: usize, seed: u64) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = (0..n_pred)
        .map(|_| Point::xy(rng.random_range(0.0..side), rng.random_range(0.0..side)))
        .collect();
    ProblemInstance::new(Region::square(side).expect("valid side"), omega, budget, CovarianceModel::SURVEY)
        .expect("valid instance")
}

/// The first `m` prediction points, used as an existing selection.
pub fn prefix_selection(instance: &ProblemInstance, m: usize) -> Vec<Point> {
    instance.omega.iter().take(m).cloned().collect()
}
