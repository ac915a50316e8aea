//! Relative entropy and the equilibrium rate function.

use crate::error::Result;
use crate::model::Params;
use crate::scalar::Scalar;
use crate::simplex::{check_dims, Simplex};

/// Relative entropy `H(p|x) = sum_i p_i log(p_i / x_i)`.
///
/// Terms with `p_i = 0` contribute nothing (`0 log 0 = 0`); a coordinate
/// with `p_i > 0` and `x_i = 0` makes the value `+inf`.
pub fn relative_entropy<S: Scalar>(p: &Simplex<S>, x: &Simplex<S>) -> Result<S> {
    check_dims(p.dim(), x.dim())?;
    let mut h = S::zero();
    for (&pi, &xi) in p.weights().iter().zip(x.weights()) {
        if pi == S::zero() {
            continue;
        }
        if xi == S::zero() {
            return Ok(S::infinity());
        }
        h += pi * (pi / xi).ln();
    }
    Ok(h)
}

/// Equilibrium rate function: `theta * H(p|x)` when `x << p`, else `+inf`.
///
/// Support of `x` inside the support of `p` is required because the
/// stationary law puts no mass outside the support of `p`.
pub fn equilibrium_rate<S: Scalar>(params: &Params<S>, x: &Simplex<S>) -> Result<S> {
    check_dims(params.dim(), x.dim())?;
    if !x.abs_continuous_wrt(params.p())? {
        return Ok(S::infinity());
    }
    Ok(params.theta() * relative_entropy(params.p(), x)?)
}
