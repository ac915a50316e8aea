//! Log density of the stationary Dirichlet law.

use statrs::function::gamma::ln_gamma;

use crate::{EquilibriumError, Result};
use wfld_core::{ModelParams, SimplexPoint};

/// Log of the stationary density with respect to Lebesgue measure
/// `dx_1 ... dx_{n-1}`:
/// `ln Gamma(theta/gamma) - sum ln Gamma(theta p_i / gamma)
///  + sum (theta p_i / gamma - 1) ln x_i`.
///
/// Requires strictly positive `p` (on degenerate support the law has point
/// masses and no Lebesgue density). At a zero coordinate the value is
/// `-inf` when the corresponding shape exceeds one and `+inf` when it is
/// below one (integrable blow-up); a shape of exactly one contributes
/// nothing.
pub fn dirichlet_log_density(params: &ModelParams, x: &SimplexPoint) -> Result<f64> {
    if !params.p().is_interior() {
        return Err(EquilibriumError::DegenerateSupport);
    }
    if x.dim() != params.dim() {
        return Err(EquilibriumError::Core(
            wfld_core::CoreError::DimensionMismatch {
                left: x.dim(),
                right: params.dim(),
            },
        ));
    }
    let scale = params.theta() / params.gamma();
    let mut log_norm = ln_gamma(scale);
    for i in 0..params.dim() {
        log_norm -= ln_gamma(scale * params.p().get(i));
    }
    let mut log_kernel = 0.0;
    for i in 0..params.dim() {
        let shape = scale * params.p().get(i);
        let xi = x.get(i);
        if xi == 0.0 {
            if shape > 1.0 {
                return Ok(f64::NEG_INFINITY);
            }
            if shape < 1.0 {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        log_kernel += (shape - 1.0) * xi.ln();
    }
    Ok(log_norm + log_kernel)
}
