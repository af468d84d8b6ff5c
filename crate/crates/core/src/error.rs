use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum ScaError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix is singular: {0}")]
    Singular(String),
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("rank-deficient input: {0}")]
    RankDeficient(String),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("ill-conditioned system: {0}")]
    Conditioning(String),
    #[error("data generation failed: {0}")]
    Generation(String),
    #[error("zero-sum column at index {0}")]
    ZeroSumColumn(usize),
    #[error("zero column at index {0}")]
    ZeroColumn(usize),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("cannot estimate noise variance when M <= N; supply sigma2 explicitly")]
    NoiseFloorUnavailable,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, ScaError>;
