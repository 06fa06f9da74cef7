//! Benchmark harness: scenario files, seeded repetitions, CSV metrics,
//! PGM renders and cross-run rankings.

pub mod error;
pub mod report;
pub mod runner;
pub mod scenario;

pub use error::{BenchError, Result};
pub use report::{compare, SummaryRow};
pub use runner::{run_scenario, RunOptions};
pub use scenario::Scenario;
