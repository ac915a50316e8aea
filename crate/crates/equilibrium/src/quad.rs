//! Adaptive Gauss-Kronrod quadrature and exact event probabilities for up
//! to three live types.
//!
//! All integrands are evaluated as `exp(log-kernel - scale)` with a common
//! scale per probability, so tilted probabilities come out as ratios in
//! which the Dirichlet normalizing constants cancel and nothing overflows.

use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::event::EventBox;
use crate::{EquilibriumError, Result};
use wfld_core::{FitnessMatrix, ModelParams};

// 15-point Kronrod extension of 7-point Gauss (QUADPACK dqk15 constants).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let fsum = f(c - x) + f(c + x);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h)
}

fn adaptive_rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = gk15(f, a, b);
    if err <= tol || depth >= 48 || (b - a) < 1e-300 {
        return value;
    }
    let mid = 0.5 * (a + b);
    adaptive_rec(f, a, mid, 0.5 * tol, depth + 1) + adaptive_rec(f, mid, b, 0.5 * tol, depth + 1)
}

fn adaptive_with(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, presplit: usize) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let mut total = 0.0;
    for j in 0..presplit {
        let lo = a + (b - a) * j as f64 / presplit as f64;
        let hi = a + (b - a) * (j + 1) as f64 / presplit as f64;
        total += adaptive_rec(f, lo, hi, tol / presplit as f64, 0);
    }
    total
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]` to absolute
/// tolerance `tol`. The interval is pre-split so narrow interior peaks are
/// found before the error estimate can miss them.
pub fn adaptive_gk(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    adaptive_with(f, a, b, tol, 16)
}

/// `int_a^b x^(alpha-1) (1-x)^(beta-1) exp(ln_g(x) - scale) dx`.
///
/// Endpoint power singularities (shape < 1) are removed exactly by the
/// substitution `x = u^(1/shape)` (and its mirror at 1), after which the
/// integrand is bounded.
fn beta_weighted_with(
    alpha: f64,
    beta: f64,
    ln_g: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    scale: f64,
    tol: f64,
    presplit: usize,
) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let kernel = |x: f64| -> f64 {
        let lx = if alpha != 1.0 { (alpha - 1.0) * x.ln() } else { 0.0 };
        let l1 = if beta != 1.0 {
            (beta - 1.0) * (1.0 - x).ln()
        } else {
            0.0
        };
        (lx + l1 + ln_g(x) - scale).exp()
    };

    let mid = 0.5_f64.clamp(a, b);
    let mut total = 0.0;

    // left part [a, mid]
    if mid > a {
        if alpha < 1.0 && a < 1e-12 {
            // u = x^alpha kills the x^(alpha-1) factor
            let g = |u: f64| -> f64 {
                let x = u.powf(1.0 / alpha);
                let l1 = if beta != 1.0 {
                    (beta - 1.0) * (1.0 - x).ln()
                } else {
                    0.0
                };
                (l1 + ln_g(x) - scale).exp() / alpha
            };
            total += adaptive_with(&g, a.powf(alpha), mid.powf(alpha), tol / 2.0, presplit);
        } else {
            total += adaptive_with(&kernel, a, mid, tol / 2.0, presplit);
        }
    }

    // right part [mid, b]
    if b > mid {
        if beta < 1.0 && b > 1.0 - 1e-12 {
            let g = |u: f64| -> f64 {
                let x = 1.0 - u.powf(1.0 / beta);
                let lx = if alpha != 1.0 { (alpha - 1.0) * x.ln() } else { 0.0 };
                (lx + ln_g(x) - scale).exp() / beta
            };
            total += adaptive_with(
                &g,
                (1.0 - b).powf(beta),
                (1.0 - mid).powf(beta),
                tol / 2.0,
                presplit,
            );
        } else {
            total += adaptive_with(&kernel, mid, b, tol / 2.0, presplit);
        }
    }
    total
}

fn beta_weighted(
    alpha: f64,
    beta: f64,
    ln_g: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    scale: f64,
    tol: f64,
) -> f64 {
    beta_weighted_with(alpha, beta, ln_g, a, b, scale, tol, 16)
}

/// Live-coordinate view of a possibly degenerate model: dead coordinates
/// carry no mass, so events reduce to the sub-simplex.
struct LiveModel {
    shapes: Vec<f64>,
    live: Vec<usize>,
    n_full: usize,
    gamma: f64,
}

impl LiveModel {
    fn build(params: &ModelParams) -> Self {
        let live = params.p().support();
        let scale = params.theta() / params.gamma();
        let shapes = live.iter().map(|&i| scale * params.p().get(i)).collect();
        Self {
            shapes,
            live,
            n_full: params.dim(),
            gamma: params.gamma(),
        }
    }

    /// Mean fitness of the embedded point, as a function of live weights.
    fn fitness(&self, v: &FitnessMatrix, w: &[f64]) -> f64 {
        let mut full = vec![0.0; self.n_full];
        for (a, &i) in self.live.iter().enumerate() {
            full[i] = w[a];
        }
        let vx = v.times(&full);
        full.iter().zip(&vx).map(|(&x, &g)| x * g).sum()
    }
}

/// Exact probability of a box event under the stationary law, optionally
/// tilted by `exp(V(x)/gamma)`; quadrature oracle for up to 3 live types.
///
/// Accuracy: about 1e-10 absolute for two live types and 1e-7 for three.
pub fn exact_event_prob(
    params: &ModelParams,
    ebox: &EventBox,
    v: Option<&FitnessMatrix>,
) -> Result<f64> {
    if ebox.dim() != params.dim() {
        return Err(EquilibriumError::Core(
            wfld_core::CoreError::DimensionMismatch {
                left: ebox.dim(),
                right: params.dim(),
            },
        ));
    }
    if let Some(vm) = v {
        if vm.dim() != params.dim() {
            return Err(EquilibriumError::Core(
                wfld_core::CoreError::DimensionMismatch {
                    left: vm.dim(),
                    right: params.dim(),
                },
            ));
        }
    }
    let model = LiveModel::build(params);
    let k = model.live.len();
    if k > 3 {
        return Err(EquilibriumError::UnsupportedDimension(k));
    }

    // dead coordinates sit at exact zero: the box must allow that
    for i in 0..params.dim() {
        if !model.live.contains(&i) && ebox.lo()[i] > 0.0 {
            return Ok(0.0);
        }
    }

    let lo: Vec<f64> = model.live.iter().map(|&i| ebox.lo()[i]).collect();
    let hi: Vec<f64> = model.live.iter().map(|&i| ebox.hi()[i]).collect();

    match k {
        1 => Ok(if lo[0] <= 1.0 && 1.0 <= hi[0] { 1.0 } else { 0.0 }),
        2 => prob_two(&model, &lo, &hi, v),
        3 => prob_three(&model, &lo, &hi, v),
        _ => unreachable!(),
    }
}

fn clip_unit(lo: f64, hi: f64) -> (f64, f64) {
    (lo.max(0.0), hi.min(1.0))
}

fn prob_two(
    model: &LiveModel,
    lo: &[f64],
    hi: &[f64],
    v: Option<&FitnessMatrix>,
) -> Result<f64> {
    // both coordinates constrain x = first live weight
    let (a, b) = clip_unit(lo[0].max(1.0 - hi[1]), hi[0].min(1.0 - lo[1]));
    if a > b {
        return Ok(0.0);
    }
    let (s0, s1) = (model.shapes[0], model.shapes[1]);

    let Some(vm) = v else {
        return Ok((beta_reg(s0, s1, b) - beta_reg(s0, s1, a)).clamp(0.0, 1.0));
    };

    // tilted: ratio of two integrals with a shared scale
    let ln_g = |x: f64| model.fitness(vm, &[x, 1.0 - x]) / model.gamma;
    let ln_kernel = |x: f64| (s0 - 1.0) * x.ln() + (s1 - 1.0) * (1.0 - x).ln() + ln_g(x);
    let mut scale = f64::NEG_INFINITY;
    for j in 1..512 {
        let x = j as f64 / 512.0;
        scale = scale.max(ln_kernel(x));
    }
    let den_est = beta_weighted(s0, s1, &ln_g, 0.0, 1.0, scale, 1e-6);
    let tol = 1e-13 * den_est.max(1e-280);
    let den = beta_weighted(s0, s1, &ln_g, 0.0, 1.0, scale, tol);
    let num = beta_weighted(s0, s1, &ln_g, a, b, scale, tol);
    Ok((num / den).clamp(0.0, 1.0))
}

fn prob_three(
    model: &LiveModel,
    lo: &[f64],
    hi: &[f64],
    v: Option<&FitnessMatrix>,
) -> Result<f64> {
    let (s0, s1, s2) = (model.shapes[0], model.shapes[1], model.shapes[2]);
    let gamma = model.gamma;

    // inner integral over y at fixed x: y in [ylo(x), yhi(x)], z = 1 - x - y
    let y_range = |x: f64, ylo: f64, yhi: f64, zlo: f64, zhi: f64| -> (f64, f64) {
        let s = 1.0 - x;
        (ylo.max(s - zhi).max(0.0), yhi.min(s - zlo).min(s))
    };

    // outer integrand in log space, shared scale from a coarse sweep
    let ln_beta12 = ln_gamma(s1) + ln_gamma(s2) - ln_gamma(s1 + s2);
    let mut scale = f64::NEG_INFINITY;
    let grid = 192;
    for i in 1..grid {
        let x = i as f64 / grid as f64;
        let s = 1.0 - x;
        // peak of the inner beta kernel contributes s^(s1+s2-1) B(s1,s2)
        let lk = (s0 - 1.0) * x.ln() + (s1 + s2 - 1.0) * s.ln() + ln_beta12;
        let fit = match v {
            Some(vm) => {
                let mut best = f64::NEG_INFINITY;
                for j in 1..24 {
                    let y = s * j as f64 / 24.0;
                    best = best.max(model.fitness(vm, &[x, y, s - y]) / gamma);
                }
                best
            }
            None => 0.0,
        };
        scale = scale.max(lk + fit);
    }

    // integral of the scaled density over { x in [xa, xb], y in box cut }
    let region_integral = |xa: f64,
                           xb: f64,
                           ylo: f64,
                           yhi: f64,
                           zlo: f64,
                           zhi: f64,
                           tol: f64|
     -> f64 {
        if !(xb > xa) {
            return 0.0;
        }
        let outer = |x: f64| -> f64 {
            let s = 1.0 - x;
            if s <= 0.0 {
                return 0.0;
            }
            let (ya, yb) = y_range(x, ylo, yhi, zlo, zhi);
            if ya >= yb {
                return 0.0;
            }
            let ln_outer = (s0 - 1.0) * x.ln() + (s1 + s2 - 1.0) * s.ln() - scale;
            match v {
                None => {
                    // closed-form inner: regularized incomplete beta in y/s
                    let di = beta_reg(s1, s2, yb / s) - beta_reg(s1, s2, ya / s);
                    if di <= 0.0 {
                        return 0.0;
                    }
                    (ln_outer + ln_beta12 + di.ln()).exp()
                }
                Some(vm) => {
                    // substitute y = s u: inner is a beta kernel on [0, 1]
                    let ln_g = |u: f64| model.fitness(vm, &[x, s * u, s * (1.0 - u)]) / gamma;
                    let inner =
                        beta_weighted_with(s1, s2, &ln_g, ya / s, yb / s, 0.0, tol, 4);
                    inner * ln_outer.exp()
                }
            }
        };
        adaptive_with(&outer, xa, xb, tol, 8)
    };

    // feasible x range for the numerator
    let (xa, xb) = clip_unit(lo[0].max(1.0 - hi[1] - hi[2]), hi[0].min(1.0 - lo[1] - lo[2]));
    let den_est = region_integral(0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1e-4);
    if den_est <= 0.0 {
        return Err(EquilibriumError::Invalid(
            "quadrature lost all mass; shapes too extreme for the oracle".into(),
        ));
    }
    let tol = 1e-9 * den_est;
    let den = region_integral(0.0, 1.0, 0.0, 1.0, 0.0, 1.0, tol);
    let num = if xa > xb {
        0.0
    } else {
        region_integral(xa, xb, lo[1], hi[1], lo[2], hi[2], tol)
    };
    Ok((num / den).clamp(0.0, 1.0))
}
