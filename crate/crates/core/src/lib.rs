//! Core numerics for finite-allele Wright-Fisher diffusions in the
//! small-sampling-rate regime: simplex geometry, mutation and selection
//! drifts, relative-entropy rate functions, path action functionals and
//! their minimization.
//!
//! Everything here is a pure function of its inputs and generic over the
//! scalar type (`f32` or `f64`). Concrete `f64` aliases are exported at the
//! crate root; the rest of the workspace works in `f64`.
//!
//! Extended-real convention: rate functions return `S::infinity()` where the
//! underlying variational problem is infeasible (support violations, paths
//! touching the simplex boundary). Infinities are produced by case analysis,
//! never by overflow, so they compose correctly through sums.

pub mod action;
pub mod drift;
pub mod dual;
pub mod entropy;
pub mod error;
pub mod minimize;
pub mod model;
pub mod path;
pub mod rng;
pub mod scalar;
pub mod simplex;
pub mod tilt;

pub use error::{CoreError, Result};
pub use scalar::Scalar;

/// Probability vector on `n` types.
pub type SimplexPoint = simplex::Simplex<f64>;
/// Tangent direction to the simplex (components sum to zero).
pub type ZeroSumVector = simplex::ZeroSum<f64>;
/// Mutation/sampling parameters (theta, p, gamma).
pub type ModelParams = model::Params<f64>;
/// Symmetric pairwise fitness matrix.
pub type FitnessMatrix = model::Fitness<f64>;
/// Time-discretized simplex-valued path.
pub type PathGrid = path::Grid<f64>;
