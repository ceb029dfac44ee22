//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid similarity matrix: {0}")]
    InvalidSimilarity(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("{what} supports at most {max} nodes, got {n}")]
    TooLarge { what: &'static str, n: usize, max: usize },

    #[error("{what} did not converge after {sweeps} sweeps (last update {residual:e})")]
    NotConverged {
        what: &'static str,
        sweeps: usize,
        residual: f64,
    },

    #[error("numerical inconsistency: {0}")]
    Inconsistent(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    InvalidConfig(Vec<String>),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
