//! Equilibrium laws of the finite-allele model: exact and Monte Carlo access
//! to the Dirichlet stationary distribution, its selection-tilted version,
//! and sampling-rate sweeps that expose the exponential decay of rare-event
//! probabilities.

pub mod density;
pub mod event;
pub mod quad;
pub mod sampler;
pub mod scan;

pub use density::dirichlet_log_density;
pub use event::EventBox;
pub use quad::exact_event_prob;
pub use sampler::{dirichlet_sample, tilted_sample, SampleBatch};
pub use scan::{
    extrapolate_boundary_crossover, extrapolate_gamma_limit, ldp_scan, wilson_interval, ScanMode,
    ScanRow,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error(transparent)]
    Core(#[from] wfld_core::CoreError),

    #[error("degenerate p (some p_i = 0): the density has no Lebesgue form; sample with dirichlet_sample, which fixes dead coordinates at zero")]
    DegenerateSupport,

    #[error("exact oracles support at most 3 live types, got {0}")]
    UnsupportedDimension(usize),

    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, EquilibriumError>;
