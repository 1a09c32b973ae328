//! Greedy selection of measurement locations in a continuous spatial field.
//!
//! The field is a zero-mean random process with squared-exponential
//! covariance; measurements carry independent noise. Choosing `k` locations
//! to minimize the total a-priori mean-squared error of the linear
//! least-squares estimator at a finite set of prediction locations is
//! equivalent to maximizing the total variance reduction `f(S)`, which is
//! monotone but not submodular.
//!
//! Two greedy strategies are provided: [`grid_greedy`] searches a uniform
//! grid over the region, and [`centroid_greedy`] searches the prediction
//! locations together with the centroids of greedily grown maximal cliques
//! of the graph joining prediction locations within `sqrt(2) L`.

pub mod analysis;
pub mod covariance;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod selection;

pub use covariance::{cov_matrix, cov_vector, CovarianceModel, Point, Region};
pub use error::{Error, Result};
pub use estimation::{marginal_gain_sweep, objective, total_mse, variance_reduction_single, MarginalGainTerms, SelectionState};
pub use geometry::{
    build_graph, clique_centroids, greedy_maximal_cliques, make_grid, matched_resolution, Clique, GridSpec,
    PredictionGraph,
};
pub use selection::{
    centroid_greedy, centroid_ground_set, greedy_select, grid_greedy, GroundSetSweep, Method, ProblemInstance,
    SelectionReport,
};
