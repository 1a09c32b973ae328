use thiserror::Error;

/// Errors raised by the selection library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid covariance model: {0}")]
    InvalidModel(String),

    #[error("distance must be non-negative, got {0}")]
    NegativeDistance(f64),

    #[error("point coordinates must be finite and non-empty")]
    InvalidPoint,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid problem instance: {0}")]
    InvalidInstance(String),

    #[error("prediction set is empty")]
    EmptyOmega,

    #[error("ground set is empty")]
    EmptyGroundSet,

    #[error("grid of {rho}^{dim} points exceeds the limit of {limit} points")]
    GridTooLarge { rho: usize, dim: usize, limit: usize },

    #[error("exhaustive search over {count} subsets exceeds the limit of {limit}")]
    TooManySubsets { count: u128, limit: u128 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A covariance factorization or posterior variance turned non-positive.
    /// With a positive noise variance this indicates an internal bug.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
