//! Sampling-rate sweeps: `gamma * log P(box)` tables and their
//! extrapolation to the zero-sampling limit.

use crate::event::EventBox;
use crate::quad::exact_event_prob;
use crate::sampler::{dirichlet_sample, tilted_sample};
use crate::{EquilibriumError, Result};
use wfld_core::{FitnessMatrix, ModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanMode {
    Exact,
    MonteCarlo,
}

/// One sweep row at a fixed sampling rate.
#[derive(Clone, Debug)]
pub struct ScanRow {
    pub gamma: f64,
    pub prob: f64,
    /// `gamma * ln prob`; for a zero-hit Monte Carlo row this is the
    /// one-sided Wilson upper bound transformed to the same scale, flagged
    /// by `zero_hits` (keeps sweep tables finite and honest).
    pub gamma_log_prob: f64,
    /// 95% interval on the `gamma * ln` scale (Monte Carlo mode only).
    pub ci: Option<(f64, f64)>,
    pub hits: Option<u64>,
    pub samples: Option<u64>,
    pub zero_hits: bool,
}

/// 95% two-sided z.
const Z95: f64 = 1.959963984540054;

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    let n = n as f64;
    let ph = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (ph + z2 / (2.0 * n)) / denom;
    let half = z / denom * (ph * (1.0 - ph) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Sweep `gamma * log P(box)` over a strictly decreasing list of sampling
/// rates, exactly (quadrature, up to 3 live types) or by Monte Carlo.
///
/// Monte Carlo rows derive their seed from `(seed, row index)`, so the
/// table is deterministic and thread-count independent.
#[allow(clippy::too_many_arguments)]
pub fn ldp_scan(
    params_template: &ModelParams,
    ebox: &EventBox,
    gammas: &[f64],
    v: Option<&FitnessMatrix>,
    mode: ScanMode,
    samples: usize,
    seed: u64,
) -> Result<Vec<ScanRow>> {
    if gammas.is_empty() {
        return Err(EquilibriumError::Invalid("empty gamma list".into()));
    }
    for w in gammas.windows(2) {
        if !(w[1] < w[0]) {
            return Err(EquilibriumError::Invalid(
                "gammas must be strictly decreasing".into(),
            ));
        }
    }
    if mode == ScanMode::MonteCarlo && samples == 0 {
        return Err(EquilibriumError::Invalid(
            "monte-carlo mode needs a positive sample count".into(),
        ));
    }

    let mut rows = Vec::with_capacity(gammas.len());
    for (row_idx, &gamma) in gammas.iter().enumerate() {
        let params = params_template.with_gamma(gamma)?;
        let row = match mode {
            ScanMode::Exact => {
                let prob = exact_event_prob(&params, ebox, v)?;
                ScanRow {
                    gamma,
                    prob,
                    gamma_log_prob: gamma * prob.ln(),
                    ci: None,
                    hits: None,
                    samples: None,
                    zero_hits: false,
                }
            }
            ScanMode::MonteCarlo => {
                let row_seed = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(row_idx as u64 + 1));
                monte_carlo_row(&params, ebox, v, samples, row_seed, gamma)?
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

fn monte_carlo_row(
    params: &ModelParams,
    ebox: &EventBox,
    v: Option<&FitnessMatrix>,
    samples: usize,
    seed: u64,
    gamma: f64,
) -> Result<ScanRow> {
    let (p_hat, n_eff, hits) = match v {
        None => {
            let batch = dirichlet_sample(params, samples, seed)?;
            let hits = batch.points.iter().filter(|x| ebox.contains(x)).count() as u64;
            (hits as f64 / samples as f64, samples as f64, hits)
        }
        Some(vm) => {
            let batch = tilted_sample(params, vm, samples, seed)?;
            let wsum: f64 = batch.weights.iter().sum();
            let hit_w: f64 = batch
                .points
                .iter()
                .zip(&batch.weights)
                .filter(|(x, _)| ebox.contains(x))
                .map(|(_, &w)| w)
                .sum();
            let hits = batch.points.iter().filter(|x| ebox.contains(x)).count() as u64;
            // Wilson width on the effective sample size of the weights
            (hit_w / wsum, batch.ess, hits)
        }
    };
    let k_eff = (p_hat * n_eff).round().max(0.0) as u64;
    let (lo, hi) = wilson_interval(k_eff, n_eff.round().max(1.0) as u64, Z95);
    let zero = hits == 0;
    let gamma_log_prob = if zero {
        gamma * hi.ln()
    } else {
        gamma * p_hat.ln()
    };
    Ok(ScanRow {
        gamma,
        prob: p_hat,
        gamma_log_prob,
        ci: Some((
            if lo > 0.0 { gamma * lo.ln() } else { f64::NEG_INFINITY },
            gamma * hi.ln(),
        )),
        hits: Some(hits),
        samples: Some(samples as u64),
        zero_hits: zero,
    })
}

/// Least-squares fit of `a + b gamma ln(1/gamma) + c gamma` through
/// `(gamma, gamma ln P)` rows; returns the extrapolated limit `a`.
///
/// The model matches the finite-rate expansion of the stationary law, whose
/// corrections carry both `gamma ln(1/gamma)` and `gamma` terms.
pub fn extrapolate_gamma_limit(rows: &[(f64, f64)]) -> f64 {
    assert!(rows.len() >= 3, "need at least 3 rows to fit 3 coefficients");
    // normal equations for the 3-parameter design
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    for &(g, y) in rows {
        let row = [1.0, g * (1.0 / g).ln(), g];
        for i in 0..3 {
            aty[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    solve3(ata, aty)[0]
}

/// Extrapolation for boundary-grazing tilted events.
///
/// When the tilted law concentrates within one Gaussian width of the box
/// edge, `gamma ln P` follows `a + gamma ln PhiBar(kappa / sqrt(gamma)) +
/// c gamma` (PhiBar = standard normal tail) rather than the polynomial
/// model; `kappa` is scanned and `(a, c)` solved linearly at each candidate.
pub fn extrapolate_boundary_crossover(rows: &[(f64, f64)]) -> f64 {
    assert!(rows.len() >= 3);
    let phibar_ln = |z: f64| -> f64 {
        if z > 8.0 {
            // asymptotic tail; erfc underflows past z ~ 38
            -0.5 * z * z - (z * (2.0 * std::f64::consts::PI).sqrt()).ln()
        } else {
            (0.5 * libm::erfc(z / std::f64::consts::SQRT_2)).ln()
        }
    };
    let mut best = (f64::INFINITY, 0.0);
    let mut kappa = 0.0;
    while kappa <= 4.0 {
        // linear LSQ in (a, c) for fixed kappa
        let mut ata = [[0.0f64; 2]; 2];
        let mut aty = [0.0f64; 2];
        for &(g, y) in rows {
            let shifted = y - g * phibar_ln(kappa / g.sqrt());
            let row = [1.0, g];
            for i in 0..2 {
                aty[i] += row[i] * shifted;
                for j in 0..2 {
                    ata[i][j] += row[i] * row[j];
                }
            }
        }
        let det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
        let a = (aty[0] * ata[1][1] - aty[1] * ata[0][1]) / det;
        let c = (ata[0][0] * aty[1] - ata[1][0] * aty[0]) / det;
        let resid: f64 = rows
            .iter()
            .map(|&(g, y)| {
                let fit = a + g * phibar_ln(kappa / g.sqrt()) + c * g;
                (y - fit).powi(2)
            })
            .sum();
        if resid < best.0 {
            best = (resid, a - kappa * kappa / 2.0);
        }
        kappa += 1e-3;
    }
    // the tail model absorbs -kappa^2/2 into PhiBar as gamma -> 0:
    // gamma ln PhiBar(kappa/sqrt(gamma)) -> -kappa^2/2, so the limit of
    // gamma ln P is a - kappa^2/2
    best.1
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..3 {
            let f = a[r][col] / a[col][col];
            for j in col..3 {
                a[r][j] -= f * a[col][j];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let mut s = b[r];
        for j in (r + 1)..3 {
            s -= a[r][j] * x[j];
        }
        x[r] = s / a[r][r];
    }
    x
}
