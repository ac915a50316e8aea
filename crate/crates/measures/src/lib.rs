//! Probability measures on `[0, 1]` with finite representations (atoms plus
//! a piecewise-constant density), interval partitions, relative entropy as a
//! supremum over refinements, and path rate functions evaluated through
//! partition projection.

pub mod measure;
pub mod path_rate;
pub mod refine_entropy;

pub use measure::{MeasureOnUnitInterval, Partition};
pub use path_rate::{projected_path_rate, MeasurePath};
pub use refine_entropy::{entropy_by_refinement, RefinementRow, RefinementTable};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error(transparent)]
    Core(#[from] wfld_core::CoreError),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),
}

pub type Result<T> = std::result::Result<T, MeasureError>;
