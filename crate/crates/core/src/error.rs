use thiserror::Error;

/// Errors produced by the geometry kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vector is not on the light cone: |Q(v)|/|v|^2 = {residual:e}")]
    DegenerateRay { residual: f64 },

    #[error("too few distinct points to span a sphere (numerical rank {rank})")]
    TooFewPoints { rank: usize },

    #[error("ill-conditioned subspace: deciding value {value:e} is inside the ambiguity band above {threshold:e}")]
    IllConditioned { value: f64, threshold: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: {reason}")]
    InsufficientData { reason: String },

    #[error("data is not consistent with a Moebius map (residual {residual:e} at pair {index})")]
    Inconsistent { index: usize, residual: f64 },

    #[error("matrix violates the Lorentz condition: |G^T J G - J| = {deviation:e}")]
    NotLorentz { deviation: f64 },

    #[error("input of size {size} exceeds the brute-force limit {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("no data for the queried point")]
    NoData,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
