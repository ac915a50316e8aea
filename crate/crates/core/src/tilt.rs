//! Selection-tilted equilibrium: the normalizing exponent `C` and the
//! tilted rate function.

use crate::drift::mean_fitness;
use crate::entropy::equilibrium_rate;
use crate::error::{CoreError, Result};
use crate::model::{Fitness, Params};
use crate::rng::stream;
use crate::scalar::Scalar;
use crate::simplex::{check_dims, Simplex};
use rand::Rng;

/// Controls for the multi-start ascent in [`compute_c`].
#[derive(Clone, Debug)]
pub struct TiltOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for TiltOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iters: 10_000,
            grad_tol: 1e-9,
            seed: 0x7116_7ED0,
        }
    }
}

/// Result of maximizing `x'Vx - theta H(p|x)` over the simplex.
#[derive(Clone, Debug)]
pub struct TiltMax<S: Scalar> {
    pub value: S,
    pub argmax: Simplex<S>,
    pub grad_norm: S,
    pub iterations: usize,
}

/// `C = sup_mu [ mean_fitness(V, mu) - equilibrium_rate(params, mu) ]`,
/// together with an argmax.
///
/// The effective domain is the set of points carrying the same support as
/// `p` (the rate is `+inf` off the support of `p`, and `H(p|.)` is `+inf`
/// unless the point covers the support), so the ascent runs in softmax
/// coordinates over `supp(p)`. The objective is smooth there but not
/// concave in general; multiple random restarts guard against local maxima.
pub fn compute_c<S: Scalar>(
    params: &Params<S>,
    v: &Fitness<S>,
    opts: &TiltOptions,
) -> Result<TiltMax<S>> {
    check_dims(params.dim(), v.dim())?;
    let n = params.dim();
    let support = params.p().support();
    let k = support.len();

    if k == 1 {
        // single surviving type: the only admissible point is that vertex
        let mu = Simplex::delta(n, support[0]);
        let value = mean_fitness(v, &mu)?;
        return Ok(TiltMax {
            value,
            argmax: mu,
            grad_norm: S::zero(),
            iterations: 0,
        });
    }

    // reduced problem on the support
    let p_sub: Vec<f64> = support.iter().map(|&i| params.p().get(i).to_f64_lossy()).collect();
    let theta = params.theta().to_f64_lossy();
    let v_sub: Vec<f64> = {
        let mut m = vec![0.0; k * k];
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                m[a * k + b] = v.get(i, j).to_f64_lossy();
            }
        }
        m
    };

    let objective = |mu: &[f64]| -> f64 {
        let mut quad = 0.0;
        for a in 0..k {
            let mut row = 0.0;
            for b in 0..k {
                row += v_sub[a * k + b] * mu[b];
            }
            quad += mu[a] * row;
        }
        let mut ent = 0.0;
        for a in 0..k {
            ent += p_sub[a] * (p_sub[a] / mu[a]).ln();
        }
        quad - theta * ent
    };

    // gradient in softmax coordinates: g_z = mu .* (g_mu - <mu, g_mu>)
    let grad_z = |mu: &[f64], out: &mut [f64]| {
        let mut g = vec![0.0; k];
        for a in 0..k {
            let mut row = 0.0;
            for b in 0..k {
                row += v_sub[a * k + b] * mu[b];
            }
            g[a] = 2.0 * row + theta * p_sub[a] / mu[a];
        }
        let mean: f64 = mu.iter().zip(&g).map(|(&m, &gi)| m * gi).sum();
        for a in 0..k {
            out[a] = mu[a] * (g[a] - mean);
        }
    };

    let softmax = |z: &[f64], mu: &mut [f64]| {
        let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for a in 0..k {
            mu[a] = (z[a] - zmax).exp();
            sum += mu[a];
        }
        for m in mu.iter_mut() {
            *m /= sum;
        }
    };

    let mut rng = stream(opts.seed, 0);
    let mut best: Option<(f64, Vec<f64>, f64, usize)> = None;
    let mut total_iters = 0usize;

    for restart in 0..opts.restarts.max(1) {
        let mut z: Vec<f64> = if restart == 0 {
            // start from p itself
            p_sub.iter().map(|&pi| pi.ln()).collect()
        } else {
            (0..k).map(|_| rng.random_range(-2.0..2.0)).collect()
        };
        let mut mu = vec![0.0; k];
        softmax(&z, &mut mu);
        let mut f = objective(&mu);
        let mut g = vec![0.0; k];
        let mut step = 0.1;
        let mut gnorm = f64::INFINITY;

        for _ in 0..opts.max_iters {
            total_iters += 1;
            grad_z(&mu, &mut g);
            gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if gnorm < opts.grad_tol {
                break;
            }
            // ascent with backtracking on the softmax chart
            let mut accepted = false;
            for _ in 0..60 {
                let z_try: Vec<f64> = z.iter().zip(&g).map(|(&zi, &gi)| zi + step * gi).collect();
                let mut mu_try = vec![0.0; k];
                softmax(&z_try, &mut mu_try);
                let f_try = objective(&mu_try);
                if f_try > f + 1e-4 * step * gnorm * gnorm {
                    z = z_try;
                    mu = mu_try;
                    f = f_try;
                    step = (step * 1.6).min(1e3);
                    accepted = true;
                    break;
                }
                step *= 0.5;
                if step < 1e-18 {
                    break;
                }
            }
            if !accepted {
                break;
            }
        }

        let better = match &best {
            None => true,
            Some((bf, _, _, _)) => f > *bf,
        };
        if better {
            best = Some((f, mu.clone(), gnorm, total_iters));
        }
    }

    let (value, mu_sub, grad_norm, iterations) = best.expect("at least one restart ran");
    if grad_norm > opts.grad_tol * 1e3 {
        return Err(CoreError::OptimizerStalled {
            best_value: value,
            grad_norm,
        });
    }

    let mut full = vec![S::zero(); n];
    for (a, &i) in support.iter().enumerate() {
        full[i] = S::of(mu_sub[a]);
    }
    Ok(TiltMax {
        value: S::of(value),
        argmax: Simplex::new(full)?,
        grad_norm: S::of(grad_norm),
        iterations,
    })
}

/// Tilted equilibrium rate `C - [ x'Vx - equilibrium_rate(params, x) ]`.
///
/// `c` is the value returned by [`compute_c`] for the same `(params, V)`;
/// it is passed in so sweeps can reuse one maximization.
pub fn selection_equilibrium_rate<S: Scalar>(
    params: &Params<S>,
    v: &Fitness<S>,
    x: &Simplex<S>,
    c: S,
) -> Result<S> {
    let fit = mean_fitness(v, x)?;
    let rate = equilibrium_rate(params, x)?;
    if rate.is_infinite() {
        return Ok(S::infinity());
    }
    Ok(c - fit + rate)
}

/// Exhaustive grid maximization of `x'Vx - theta H(p|x)` for `n <= 3`,
/// coarse scan refined locally. Test oracle for [`compute_c`]; slow and
/// deliberately independent of the ascent path.
pub fn grid_search_c<S: Scalar>(
    params: &Params<S>,
    v: &Fitness<S>,
    coarse: f64,
    fine: f64,
) -> Result<(S, Simplex<S>)> {
    check_dims(params.dim(), v.dim())?;
    let support = params.p().support();
    let k = support.len();
    if k > 3 {
        return Err(CoreError::InvalidParams(
            "grid oracle supports at most 3 live types".into(),
        ));
    }
    let n = params.dim();
    let theta = params.theta().to_f64_lossy();
    let p_sub: Vec<f64> = support.iter().map(|&i| params.p().get(i).to_f64_lossy()).collect();
    let v_sub: Vec<f64> = {
        let mut m = vec![0.0; k * k];
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                m[a * k + b] = v.get(i, j).to_f64_lossy();
            }
        }
        m
    };
    let f = |mu: &[f64]| -> f64 {
        let mut quad = 0.0;
        for a in 0..k {
            let mut row = 0.0;
            for b in 0..k {
                row += v_sub[a * k + b] * mu[b];
            }
            quad += mu[a] * row;
        }
        let mut ent = 0.0;
        for a in 0..k {
            if mu[a] <= 0.0 {
                return f64::NEG_INFINITY;
            }
            ent += p_sub[a] * (p_sub[a] / mu[a]).ln();
        }
        quad - theta * ent
    };

    let scan = |lo: Vec<f64>, hi: Vec<f64>, h: f64| -> (f64, Vec<f64>) {
        let mut best = (f64::NEG_INFINITY, vec![0.0; k]);
        match k {
            1 => {
                best = (f(&[1.0]), vec![1.0]);
            }
            2 => {
                let mut x = lo[0].max(h);
                while x <= hi[0].min(1.0 - h) + 1e-15 {
                    let val = f(&[x, 1.0 - x]);
                    if val > best.0 {
                        best = (val, vec![x, 1.0 - x]);
                    }
                    x += h;
                }
            }
            3 => {
                let mut x = lo[0].max(h);
                while x <= hi[0].min(1.0 - 2.0 * h) + 1e-15 {
                    let mut y = lo[1].max(h);
                    while y <= hi[1].min(1.0 - x - h) + 1e-15 {
                        let val = f(&[x, y, 1.0 - x - y]);
                        if val > best.0 {
                            best = (val, vec![x, y, 1.0 - x - y]);
                        }
                        y += h;
                    }
                    x += h;
                }
            }
            _ => unreachable!(),
        }
        best
    };

    let (_, mut arg) = scan(vec![0.0; k], vec![1.0; k], coarse);
    // local refinement around the coarse argmax
    let lo: Vec<f64> = arg.iter().map(|&x| (x - 2.0 * coarse).max(0.0)).collect();
    let hi: Vec<f64> = arg.iter().map(|&x| (x + 2.0 * coarse).min(1.0)).collect();
    let (val, arg2) = scan(lo, hi, fine);
    arg = arg2;

    let mut full = vec![S::zero(); n];
    for (a, &i) in support.iter().enumerate() {
        full[i] = S::of(arg[a]);
    }
    Ok((S::of(val), Simplex::new(full)?))
}
