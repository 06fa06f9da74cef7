use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] boa_explore::Error),
    #[error("{}: {message}", path.display())]
    Scenario { path: PathBuf, message: String },
    #[error("{}: schema mismatch: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    #[error("{} of {total} runs failed", failed)]
    RunsFailed { failed: usize, total: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
