//! Experiment driver: loads declarative experiment configs, orchestrates
//! the sampling, simulation and minimization crates, and writes
//! reproducible CSV/JSON artifacts.

pub mod config;
pub mod run;
pub mod tube;

pub use config::{ExperimentConfig, ExperimentKind};
pub use run::{run, RunOverrides, RunSummary};
pub use tube::{estimate_tube_probability, TubeEstimate};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Rejected before any computation started; exit code 2.
    #[error("config error: {0}")]
    Config(String),

    /// Failure while running; exit code 3.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Numerical(_) | HarnessError::Io(_) => 3,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

/// 17-significant-digit float for bit-exact CSV diffs.
pub(crate) fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}
