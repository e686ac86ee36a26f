use alloc::string::String;

/// Errors raised by the tomography core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unsupported operator dimension {0} (expected 2 or 4)")]
    UnsupportedDim(usize),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is not one (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("state vector is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("design matrix is rank deficient at alphas {alphas:?} (rank {rank} of {columns})")]
    RankDeficient {
        alphas: alloc::vec::Vec<f64>,
        rank: usize,
        columns: usize,
    },

    #[error("invalid setting set: {0}")]
    InvalidSettings(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("count records do not match the setting set: {0}")]
    RecordMismatch(String),
}

pub type Result<T> = core::result::Result<T, Error>;
