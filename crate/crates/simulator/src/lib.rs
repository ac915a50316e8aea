//! Path simulation for the finite-allele diffusion: Euler-Maruyama stepping
//! of the degenerate SDE in the `n - 1` dimensional chart, plus the
//! change-of-measure log-weight connecting the neutral and selective path
//! laws.

pub mod cholesky;
pub mod girsanov;
pub mod sim;

pub use cholesky::factor_covariance;
pub use girsanov::girsanov_log_weight;
pub use sim::{simulate, simulate_batch, simulate_fold, SimConfig, Trajectory};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] wfld_core::CoreError),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("non-finite state at step {step}")]
    NonFiniteState { step: usize },

    #[error("trajectory does not match: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, SimError>;
