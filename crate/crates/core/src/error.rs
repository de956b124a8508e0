use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameters (N = {dim}, s = {s}): require 0 < s < min(1, N/2)")]
    InvalidOrder { dim: usize, s: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("field has nonzero mean ({mean:e} relative); project onto the zero-mean subspace first")]
    NonZeroMean { mean: f64 },

    #[error("field has zero fractional seminorm")]
    ZeroSeminorm,

    #[error("group elements use different dilation factors ({0} vs {1})")]
    GammaMismatch(f64, f64),

    #[error("group action out of range: {0}")]
    OutOfRange(String),

    #[error("numerical overflow: {0}")]
    Overflow(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("extraction stalled: {0}")]
    Stalled(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("corrupt field file: {0}")]
    CorruptFile(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
