//! Scalar abstraction so the kernels work in f32 or f64.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Floating-point scalar for the numeric kernels.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Convert an `f64` literal; panics only if the literal is not
    /// representable, which can't happen for the constants used here.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal must be representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::one() / Self::two()
    }

    /// Absolute tolerance for unit-sum and zero-sum validation.
    fn sum_tol() -> Self;

    /// Weights below this snap to exact zero at construction.
    fn snap_tol() -> Self;
}

impl Scalar for f32 {
    // single-precision analogues of the f64 contract values
    fn sum_tol() -> Self {
        1e-5
    }
    fn snap_tol() -> Self {
        1e-9
    }
}

impl Scalar for f64 {
    fn sum_tol() -> Self {
        crate::simplex::SUM_TOL
    }
    fn snap_tol() -> Self {
        crate::simplex::SNAP_TOL
    }
}
