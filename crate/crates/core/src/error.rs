use thiserror::Error;

/// Errors produced anywhere in the learner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("covariance matrix is not symmetric (entry ({row}, {col}) differs by {gap:e})")]
    AsymmetricCovariance { row: usize, col: usize, gap: f64 },

    #[error("covariance matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("affine transform matrix is singular")]
    SingularTransform,

    #[error("invalid radii: need 0 < alpha < gamma <= {max_gamma}, got alpha={alpha}, gamma={gamma}")]
    InvalidRadii { alpha: f64, gamma: f64, max_gamma: f64 },

    #[error("infeasible budget: {what} needs {requested:e} elements, cap is {cap}")]
    InfeasibleBudget { what: &'static str, requested: f64, cap: u64 },

    #[error("insufficient data: {required} points required, {available} available")]
    InsufficientData { required: u64, available: u64 },

    #[error("candidate list is empty")]
    EmptyCandidates,

    #[error("score table has no entries and no bottom weight")]
    EmptyTable,

    #[error("metric mismatch: cover uses {cover}, caller supplied {supplied}")]
    MetricMismatch { cover: &'static str, supplied: &'static str },

    #[error("overflow while evaluating {0}")]
    Overflow(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed model: {0}")]
    MalformedModel(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
