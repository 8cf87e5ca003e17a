use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("basis normalization failed at z = {z}: every kernel evaluated to zero")]
    Normalization { z: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("singular linear system in {context} (rank {rank} < {cols}); increase the ridge term")]
    SingularSystem {
        context: &'static str,
        rank: usize,
        cols: usize,
    },

    #[error("{0} requires a non-empty input")]
    Empty(&'static str),

    #[error("{context} needs at least {required} samples, got {actual}")]
    NotEnoughSamples {
        context: &'static str,
        required: usize,
        actual: usize,
    },

    #[error("covariance is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemiDefinite { min_eigenvalue: f64 },

    #[error("non-finite state during DMP integration at step {step}")]
    Integration { step: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("split references pattern {0} which has no samples in the dataset")]
    MissingPattern(u8),

    #[error("inconsistent dataset: {0}")]
    InconsistentDataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
