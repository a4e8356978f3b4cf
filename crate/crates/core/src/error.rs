use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("root isolation failed for eigenvalue index {index}: {reason}")]
    ConvergenceFailure { index: usize, reason: String },

    #[error("insufficient resolution: {grid_points} grid points, need at least {required}")]
    InsufficientResolution { grid_points: usize, required: usize },

    #[error("resource limit in {context}: budget {budget}, high-water mark {high_water}")]
    ResourceLimit {
        context: String,
        budget: u64,
        high_water: u64,
    },

    #[error("index {index} out of range for spectrum of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("oracle box of side {box_side} too small: rank {k_max} eigensum {kth_sum} is not below excluded minimum {excluded_min}")]
    OracleBoxTooSmall {
        box_side: usize,
        k_max: usize,
        kth_sum: f64,
        excluded_min: f64,
    },

    #[error("sublevel set is unbounded: symbol vanishes along coordinate axis {axis}")]
    UnboundedSublevel { axis: usize },

    #[error("oracle mismatch in {context}: {detail}")]
    OracleMismatch { context: String, detail: String },

    #[error("invalid variant: {0}")]
    InvalidVariant(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
