use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the exploration library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("evaluator returned a non-finite fitness ({0})")]
    NonFiniteFitness(f64),

    #[error("evaluator failed: {0}")]
    Evaluation(String),

    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: row {row} has {found} cells, expected {expected}")]
    DimensionMismatch {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("map border cell ({x}, {y}) is not occupied")]
    OpenBorder { x: usize, y: usize },

    #[error("robot needs {required} steps but only {remaining} remain")]
    OutOfEnergy { required: u32, remaining: u32 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
