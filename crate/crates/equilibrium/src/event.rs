//! Product-of-intervals events on the simplex.

use crate::{EquilibriumError, Result};
use wfld_core::SimplexPoint;

/// Per-coordinate closed intervals `[lo_i, hi_i]`; a point is in the event
/// iff every coordinate lies in its interval.
#[derive(Clone, Debug, PartialEq)]
pub struct EventBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl EventBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(EquilibriumError::Invalid(
                "box bounds must be non-empty and of equal length".into(),
            ));
        }
        for i in 0..lo.len() {
            if !(lo[i].is_finite() && hi[i].is_finite()) {
                return Err(EquilibriumError::Invalid(format!(
                    "non-finite bound at coordinate {i}"
                )));
            }
            if lo[i] < 0.0 || hi[i] > 1.0 || lo[i] > hi[i] {
                return Err(EquilibriumError::Invalid(format!(
                    "need 0 <= lo <= hi <= 1 at coordinate {i}, got [{}, {}]",
                    lo[i], hi[i]
                )));
            }
        }
        let sum_lo: f64 = lo.iter().sum();
        let sum_hi: f64 = hi.iter().sum();
        if sum_lo > 1.0 + 1e-12 || sum_hi < 1.0 - 1e-12 {
            return Err(EquilibriumError::Invalid(format!(
                "box does not intersect the simplex: sum(lo) = {sum_lo}, sum(hi) = {sum_hi}"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// The whole simplex in dimension `n`.
    pub fn whole(n: usize) -> Self {
        Self {
            lo: vec![0.0; n],
            hi: vec![1.0; n],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    #[inline]
    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    #[inline]
    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, x: &SimplexPoint) -> bool {
        x.dim() == self.dim()
            && x.weights()
                .iter()
                .enumerate()
                .all(|(i, &xi)| self.lo[i] <= xi && xi <= self.hi[i])
    }
}
