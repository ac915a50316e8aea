//! Factoring the sampling covariance.

use wfld_core::SimplexPoint;

/// Pivot threshold below which a direction is treated as degenerate.
const PIVOT_TOL: f64 = 1e-14;

/// Lower-triangular `sigma` with `sigma sigma' = D(x)` on the first `n - 1`
/// coordinates, `D_kl = x_k (delta_kl - x_l)`.
///
/// On the boundary `D` is rank-deficient; columns whose pivot falls below
/// `1e-14` are zeroed, which is exact for this covariance family because
/// every Schur complement is again of sampling-covariance type (a scaled
/// `diag(v) - v v' / s` with non-negative diagonal), so a vanishing pivot
/// always comes with a vanishing row.
pub fn factor_covariance(x: &SimplexPoint) -> Vec<f64> {
    let m = x.dim() - 1;
    let mut sigma = vec![0.0f64; m * m];
    factor_covariance_into(x.weights(), &mut sigma);
    sigma
}

/// Allocation-free variant for the stepping loop: `weights` has length
/// `m + 1`, `sigma` is the `m x m` output, fully overwritten.
pub(crate) fn factor_covariance_into(weights: &[f64], sigma: &mut [f64]) {
    let m = weights.len() - 1;
    debug_assert_eq!(sigma.len(), m * m);
    sigma.iter_mut().for_each(|s| *s = 0.0);
    for j in 0..m {
        let mut pivot = weights[j] * (1.0 - weights[j]);
        for t in 0..j {
            pivot -= sigma[j * m + t] * sigma[j * m + t];
        }
        if pivot <= PIVOT_TOL {
            // degenerate direction: leave the column zero
            continue;
        }
        let root = pivot.sqrt();
        sigma[j * m + j] = root;
        for i in (j + 1)..m {
            let mut elem = -weights[i] * weights[j];
            for t in 0..j {
                elem -= sigma[i * m + t] * sigma[j * m + t];
            }
            sigma[i * m + j] = elem / root;
        }
    }
}
