use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid label {value} at row {row}: labels must be non-negative integers")]
    InvalidLabel { row: usize, value: f64 },

    #[error("{variant} system matrix is numerically singular (pivot ratio {pivot_ratio:.3e}); try a larger rho or lambda")]
    Singular {
        variant: &'static str,
        pivot_ratio: f64,
    },

    #[error("ADMM diverged at iteration {iteration} (rho = {rho})")]
    Diverged { iteration: usize, rho: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("index {index} out of range for a model with {n} anchors")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("model file is missing field `{0}`")]
    MissingField(String),

    #[error("model kind mismatch: expected `{expected}`, found `{found}`")]
    KindMismatch { expected: String, found: String },

    #[error("unsupported model schema version {0}")]
    SchemaVersion(u64),

    #[error("malformed model file: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
