//! Minimal-action paths between fixed endpoints and the quasi-potential.
//!
//! Interior knots are represented in an unconstrained chart: each knot is
//! `k - 1` free reals mapped through exponentials normalized to sum one
//! (`k` = size of the support of `p`). Strict positivity is built into the
//! chart, so the infinite boundary barrier of the action is invisible to
//! the optimizer.

use std::fmt;

use crate::error::{CoreError, Result};
use crate::model::{Fitness, Params};
use crate::path::{uniform_times, Grid};
use crate::scalar::Scalar;
use crate::simplex::{check_dims, Simplex};

/// A fixed-endpoint minimization problem.
#[derive(Clone, Debug)]
pub struct MinimizeSpec<S: Scalar> {
    pub start: Simplex<S>,
    pub end: Simplex<S>,
    pub horizon: S,
    pub knots: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub with_selection: Option<Fitness<S>>,
}

impl<S: Scalar> MinimizeSpec<S> {
    pub fn new(start: Simplex<S>, end: Simplex<S>, horizon: S, knots: usize) -> Self {
        Self {
            start,
            end,
            horizon,
            knots,
            max_iters: 50_000,
            grad_tol: 1e-8,
            with_selection: None,
        }
    }

    fn validate(&self, params: &Params<S>) -> Result<()> {
        check_dims(self.start.dim(), params.dim())?;
        check_dims(self.end.dim(), params.dim())?;
        if self.knots < 4 {
            return Err(CoreError::InvalidParams(
                "need at least 4 path segments".into(),
            ));
        }
        if !(self.horizon.is_finite() && self.horizon > S::zero()) {
            return Err(CoreError::InvalidParams("horizon must be positive".into()));
        }
        for (name, x) in [("start", &self.start), ("end", &self.end)] {
            if !x.positive_on_support_of(params.p())? || !x.abs_continuous_wrt(params.p())? {
                return Err(CoreError::InvalidParams(format!(
                    "{name} point must be strictly positive exactly on the support of p \
                     (boundary endpoints have infinite action)"
                )));
            }
        }
        if let Some(v) = &self.with_selection {
            check_dims(v.dim(), params.dim())?;
        }
        Ok(())
    }
}

/// Result of a minimization run.
#[derive(Clone, Debug)]
pub struct MinimizeResult<S: Scalar> {
    pub path: Grid<S>,
    pub action: S,
    pub iterations: usize,
    pub grad_norm: S,
}

/// Minimization failure; a stall still carries the best iterate found.
#[derive(Debug)]
pub enum MinimizeError<S: Scalar> {
    Invalid(CoreError),
    Stalled { best: MinimizeResult<S> },
}

impl<S: Scalar> fmt::Display for MinimizeError<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MinimizeError::Invalid(e) => write!(f, "{e}"),
            MinimizeError::Stalled { best } => write!(
                f,
                "minimizer exhausted its budget at gradient norm {} (best action {})",
                best.grad_norm, best.action
            ),
        }
    }
}

impl<S: Scalar> std::error::Error for MinimizeError<S> {}

impl<S: Scalar> From<CoreError> for MinimizeError<S> {
    fn from(e: CoreError) -> Self {
        MinimizeError::Invalid(e)
    }
}

// ---------------------------------------------------------------------------
// reduced problem on the support of p
// ---------------------------------------------------------------------------

struct Reduced<S: Scalar> {
    support: Vec<usize>,
    k: usize,
    theta: S,
    p: Vec<S>,
    v: Option<Vec<S>>, // k x k, row-major
}

impl<S: Scalar> Reduced<S> {
    fn build(params: &Params<S>, v: Option<&Fitness<S>>) -> Self {
        let support = params.p().support();
        let k = support.len();
        let p = support.iter().map(|&i| params.p().get(i)).collect();
        let v = v.map(|vm| {
            let mut m = vec![S::zero(); k * k];
            for (a, &i) in support.iter().enumerate() {
                for (b, &j) in support.iter().enumerate() {
                    m[a * k + b] = vm.get(i, j);
                }
            }
            m
        });
        Self {
            support,
            k,
            theta: params.theta(),
            p,
            v,
        }
    }

    fn restrict(&self, x: &Simplex<S>) -> Vec<S> {
        self.support.iter().map(|&i| x.get(i)).collect()
    }

    fn embed(&self, w: &[S], n: usize) -> Result<Simplex<S>> {
        let mut full = vec![S::zero(); n];
        for (a, &i) in self.support.iter().enumerate() {
            full[i] = w[a];
        }
        Simplex::new(full)
    }

    fn vx(&self, x: &[S], out: &mut [S]) {
        let k = self.k;
        if let Some(v) = &self.v {
            for i in 0..k {
                let mut s = S::zero();
                for j in 0..k {
                    s += v[i * k + j] * x[j];
                }
                out[i] = s;
            }
        } else {
            out.iter_mut().for_each(|o| *o = S::zero());
        }
    }

    /// Midpoint action over flat knots; optionally accumulates the gradient
    /// with respect to every knot coordinate (chain rule to the chart is
    /// applied by the caller).
    fn action_and_grad(&self, times: &[S], knots: &[S], mut grad: Option<&mut [S]>) -> S {
        let k = self.k;
        let steps = times.len() - 1;
        let half = S::half();
        let half_theta = self.theta * half;
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|x| *x = S::zero());
        }

        let mut mid = vec![S::zero(); k];
        let mut u = vec![S::zero(); k];
        let mut w = vec![S::zero(); k];
        let mut g_mid = vec![S::zero(); k];
        let mut vu = vec![S::zero(); k];

        let mut total = S::zero();
        for s in 0..steps {
            let dt = times[s + 1] - times[s];
            let a = &knots[s * k..(s + 1) * k];
            let c = &knots[(s + 1) * k..(s + 2) * k];
            for i in 0..k {
                mid[i] = (a[i] + c[i]) * half;
                if mid[i] <= S::zero() {
                    return S::infinity();
                }
            }
            self.vx(&mid, &mut g_mid);
            let q: S = (0..k).map(|i| mid[i] * g_mid[i]).sum();
            let mut su = S::zero();
            for i in 0..k {
                let vel = (c[i] - a[i]) / dt;
                let drift = half_theta * (self.p[i] - mid[i]) + mid[i] * (g_mid[i] - q);
                u[i] = vel - drift;
                w[i] = u[i] / mid[i];
                su += u[i];
            }
            let cost: S = (0..k).map(|i| u[i] * w[i]).sum::<S>() * half * dt;
            total += cost;

            if let Some(g) = grad.as_deref_mut() {
                // d(drift)/d(mid) applied to w, fitness part
                if self.v.is_some() {
                    self.vx(&u, &mut vu);
                }
                for i in 0..k {
                    let mut gw = -half_theta * w[i];
                    if self.v.is_some() {
                        gw += w[i] * (g_mid[i] - q) + vu[i]
                            - S::two() * g_mid[i] * su;
                    }
                    let shared = -(dt * half) * gw - (dt / S::of(4.0)) * w[i] * w[i];
                    g[s * k + i] += -w[i] + shared;
                    g[(s + 1) * k + i] += w[i] + shared;
                }
            }
        }
        total
    }
}

// chart: z in R^{k-1}  <->  weights in the open simplex, gauge w_k
fn chart_to_weights<S: Scalar>(z: &[S], out: &mut [S]) {
    let k = out.len();
    let mut zmax = S::zero(); // the implicit gauge coordinate is 0
    for &zi in z {
        zmax = zmax.max(zi);
    }
    let mut sum = S::zero();
    for i in 0..k - 1 {
        out[i] = (z[i] - zmax).exp();
        sum += out[i];
    }
    out[k - 1] = (-zmax).exp();
    sum += out[k - 1];
    for o in out.iter_mut() {
        *o /= sum;
    }
}

fn weights_to_chart<S: Scalar>(w: &[S], out: &mut [S]) {
    let k = w.len();
    let last = w[k - 1];
    for i in 0..k - 1 {
        out[i] = (w[i] / last).ln();
    }
}

/// Chart gradient of the discretized action with respect to each interior
/// knot. Matches central finite differences in the chart coordinates.
pub fn action_gradient<S: Scalar>(
    params: &Params<S>,
    v: Option<&Fitness<S>>,
    path: &Grid<S>,
) -> Result<Vec<Vec<S>>> {
    check_dims(params.dim(), path.dim())?;
    if let Some(vm) = v {
        check_dims(vm.dim(), path.dim())?;
    }
    let red = Reduced::build(params, v);
    let k = red.k;
    if k < 2 {
        return Err(CoreError::InvalidParams(
            "gradient needs at least two live types".into(),
        ));
    }
    let m = path.len();
    let mut knots = Vec::with_capacity(m * k);
    for row in 0..m {
        let kn = path.knot_point(row);
        if !kn.positive_on_support_of(params.p())? || !kn.abs_continuous_wrt(params.p())? {
            return Err(CoreError::BoundaryTouched);
        }
        knots.extend(red.restrict(&kn));
    }
    let mut grad_full = vec![S::zero(); m * k];
    let a = red.action_and_grad(path.times(), &knots, Some(&mut grad_full));
    if !a.is_finite() {
        return Err(CoreError::BoundaryTouched);
    }
    let mut out = Vec::with_capacity(m - 2);
    for j in 1..m - 1 {
        let wj = &knots[j * k..(j + 1) * k];
        let gj = &grad_full[j * k..(j + 1) * k];
        let inner: S = (0..k).map(|i| wj[i] * gj[i]).sum();
        out.push((0..k - 1).map(|i| wj[i] * (gj[i] - inner)).collect());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// limited-memory quasi-Newton with Armijo backtracking
// ---------------------------------------------------------------------------

struct LbfgsOutcome<S> {
    x: Vec<S>,
    value: S,
    grad_norm: S,
    iterations: usize,
    converged: bool,
}

fn lbfgs<S: Scalar>(
    x0: Vec<S>,
    max_iters: usize,
    grad_tol: S,
    mut fg: impl FnMut(&[S], &mut [S]) -> S,
) -> LbfgsOutcome<S> {
    const MEMORY: usize = 10;
    // an objective stall may end the run only once the gradient is inside
    // the acceptable band; a stall outside it keeps iterating and is
    // reported as a failure when the budget runs out
    let stall_band = grad_tol * S::of(1e3);
    let stall_tol = S::of(1e-14);
    let mut stall_count = 0usize;

    let dim = x0.len();
    let mut x = x0;
    let mut g = vec![S::zero(); dim];
    let mut f = fg(&x, &mut g);
    let mut hist: Vec<(Vec<S>, Vec<S>, S)> = Vec::new(); // (s, y, 1/(y's))
    let mut iterations = 0;

    let norm = |v: &[S]| v.iter().map(|&a| a * a).sum::<S>().sqrt();
    let dot = |a: &[S], b: &[S]| a.iter().zip(b).map(|(&u, &w)| u * w).sum::<S>();

    let mut gnorm = norm(&g);
    while iterations < max_iters && gnorm > grad_tol {
        iterations += 1;

        // two-loop recursion
        let mut d: Vec<S> = g.iter().map(|&gi| -gi).collect();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let alpha = *rho * dot(s, &d);
            for i in 0..dim {
                d[i] -= alpha * y[i];
            }
            alphas.push(alpha);
        }
        if let Some((s, y, _)) = hist.last() {
            let scale = dot(s, y) / dot(y, y);
            for di in d.iter_mut() {
                *di *= scale;
            }
        }
        for ((s, y, rho), &alpha) in hist.iter().zip(alphas.iter().rev()) {
            let beta = *rho * dot(y, &d);
            for i in 0..dim {
                d[i] += (alpha - beta) * s[i];
            }
        }

        let mut slope = dot(&g, &d);
        if !(slope < S::zero()) {
            // fall back to steepest descent if curvature info went bad
            d = g.iter().map(|&gi| -gi).collect();
            slope = -gnorm * gnorm;
            hist.clear();
        }

        // Armijo backtracking
        let mut t = if hist.is_empty() {
            (S::one() / gnorm.max(S::one())).min(S::one())
        } else {
            S::one()
        };
        let c1 = S::of(1e-4);
        let mut accepted = false;
        let mut x_new = vec![S::zero(); dim];
        let mut g_new = vec![S::zero(); dim];
        let f_prev = f;
        for _ in 0..60 {
            for i in 0..dim {
                x_new[i] = x[i] + t * d[i];
            }
            let f_new = fg(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= f + c1 * t * slope {
                let s: Vec<S> = (0..dim).map(|i| t * d[i]).collect();
                let y: Vec<S> = (0..dim).map(|i| g_new[i] - g[i]).collect();
                let sy = dot(&s, &y);
                if sy > S::of(1e-18) * norm(&s) * norm(&y) {
                    if hist.len() == MEMORY {
                        hist.remove(0);
                    }
                    let rho = S::one() / sy;
                    hist.push((s, y, rho));
                }
                x.copy_from_slice(&x_new);
                g.copy_from_slice(&g_new);
                f = f_new;
                accepted = true;
                break;
            }
            t *= S::half();
        }
        if !accepted {
            break;
        }
        gnorm = norm(&g);

        if f_prev - f <= stall_tol * (S::one() + f.abs()) {
            stall_count += 1;
            if stall_count >= 12 && gnorm <= stall_band {
                break;
            }
        } else {
            stall_count = 0;
        }
    }

    LbfgsOutcome {
        x,
        value: f,
        grad_norm: gnorm,
        iterations,
        converged: gnorm <= grad_tol,
    }
}

// ---------------------------------------------------------------------------
// minimize_action / quasi_potential
// ---------------------------------------------------------------------------

/// Minimize the discretized action over paths from `spec.start` to
/// `spec.end` on `[0, horizon]` with `spec.knots` uniform segments.
///
/// Two initializations are tried: chart-space linear interpolation and the
/// time-reversed relaxation flow into the end point; the better final result
/// is kept. The achieved action is an upper bound on the true infimum.
pub fn minimize_action<S: Scalar>(
    params: &Params<S>,
    spec: &MinimizeSpec<S>,
    init: Option<&Grid<S>>,
) -> std::result::Result<MinimizeResult<S>, MinimizeError<S>> {
    spec.validate(params)?;
    let red = Reduced::build(params, spec.with_selection.as_ref());
    let k = red.k;
    let n = params.dim();
    let m = spec.knots;
    let times = uniform_times(spec.horizon, m);

    if k < 2 {
        // single live type: the only admissible path is constant
        let knots = vec![spec.start.clone(); m + 1];
        let path = Grid::new(times, knots).map_err(MinimizeError::Invalid)?;
        return Ok(MinimizeResult {
            path,
            action: S::zero(),
            iterations: 0,
            grad_norm: S::zero(),
        });
    }

    let start_w = red.restrict(&spec.start);
    let end_w = red.restrict(&spec.end);
    let mut z_start = vec![S::zero(); k - 1];
    let mut z_end = vec![S::zero(); k - 1];
    weights_to_chart(&start_w, &mut z_start);
    weights_to_chart(&end_w, &mut z_end);

    let dims = (m - 1) * (k - 1);

    // chart-space linear interpolation between the endpoint charts
    let linear_init = || -> Vec<S> {
        let mut z = vec![S::zero(); dims];
        for j in 1..m {
            let lam = S::of(j as f64) / S::of(m as f64);
            for i in 0..k - 1 {
                z[(j - 1) * (k - 1) + i] =
                    (S::one() - lam) * z_start[i] + lam * z_end[i];
            }
        }
        z
    };

    // time-reversed relaxation: run the mutation flow backwards from the end
    let reversed_init = || -> Vec<S> {
        let mut z = vec![S::zero(); dims];
        let mut w = vec![S::zero(); k];
        let mut zj = vec![S::zero(); k - 1];
        for j in 1..m {
            let decay = (-params.theta() * S::half() * (spec.horizon - times[j])).exp();
            for i in 0..k {
                w[i] = (red.p[i] + decay * (end_w[i] - red.p[i])).max(S::of(1e-300));
            }
            weights_to_chart(&w, &mut zj);
            z[(j - 1) * (k - 1)..j * (k - 1)].copy_from_slice(&zj);
        }
        z
    };

    let chart_of_path = |g: &Grid<S>| -> std::result::Result<Vec<S>, MinimizeError<S>> {
        if g.len() != m + 1 {
            return Err(MinimizeError::Invalid(CoreError::InvalidPath(format!(
                "initial path has {} knots, spec wants {}",
                g.len(),
                m + 1
            ))));
        }
        let mut z = vec![S::zero(); dims];
        let mut zj = vec![S::zero(); k - 1];
        for j in 1..m {
            let kn = g.knot_point(j);
            if !kn
                .positive_on_support_of(params.p())
                .map_err(MinimizeError::Invalid)?
            {
                return Err(MinimizeError::Invalid(CoreError::BoundaryTouched));
            }
            let w = red.restrict(&kn);
            weights_to_chart(&w, &mut zj);
            z[(j - 1) * (k - 1)..j * (k - 1)].copy_from_slice(&zj);
        }
        Ok(z)
    };

    let mut inits: Vec<Vec<S>> = Vec::new();
    match init {
        Some(g) => inits.push(chart_of_path(g)?),
        None => inits.push(linear_init()),
    }
    inits.push(reversed_init());

    // flat knot buffer shared by the objective closure
    let mut knots = vec![S::zero(); (m + 1) * k];
    knots[..k].copy_from_slice(&start_w);
    knots[m * k..].copy_from_slice(&end_w);

    let mut grad_full = vec![S::zero(); (m + 1) * k];

    let mut best: Option<LbfgsOutcome<S>> = None;
    let mut total_iters = 0usize;
    for z0 in inits {
        let outcome = {
            let knots = &mut knots;
            let grad_full = &mut grad_full;
            lbfgs(z0, spec.max_iters, S::of(spec.grad_tol), |z, gz| {
                for j in 1..m {
                    let w = &mut knots[j * k..(j + 1) * k];
                    chart_to_weights(&z[(j - 1) * (k - 1)..j * (k - 1)], w);
                }
                let a = red.action_and_grad(&times, knots, Some(grad_full));
                if !a.is_finite() {
                    gz.iter_mut().for_each(|x| *x = S::zero());
                    return S::infinity();
                }
                for j in 1..m {
                    let wj = &knots[j * k..(j + 1) * k];
                    let gj = &grad_full[j * k..(j + 1) * k];
                    let inner: S = (0..k).map(|i| wj[i] * gj[i]).sum();
                    for i in 0..k - 1 {
                        gz[(j - 1) * (k - 1) + i] = wj[i] * (gj[i] - inner);
                    }
                }
                a
            })
        };
        total_iters += outcome.iterations;
        let better = match &best {
            None => true,
            Some(b) => outcome.value < b.value,
        };
        if better {
            best = Some(outcome);
        }
    }

    let out = best.expect("at least one initialization ran");

    // rebuild the winning path
    for j in 1..m {
        let w = &mut knots[j * k..(j + 1) * k];
        chart_to_weights(&out.x[(j - 1) * (k - 1)..j * (k - 1)], w);
    }
    let mut full_knots = Vec::with_capacity(m + 1);
    full_knots.push(spec.start.clone());
    for j in 1..m {
        full_knots.push(
            red.embed(&knots[j * k..(j + 1) * k], n)
                .map_err(MinimizeError::Invalid)?,
        );
    }
    full_knots.push(spec.end.clone());
    let path = Grid::new(times, full_knots).map_err(MinimizeError::Invalid)?;

    let result = MinimizeResult {
        path,
        action: out.value,
        iterations: total_iters,
        grad_norm: out.grad_norm,
    };
    if !out.converged && out.grad_norm.to_f64_lossy() > 1e3 * spec.grad_tol {
        return Err(MinimizeError::Stalled { best: result });
    }
    Ok(result)
}

/// One quasi-potential table row.
#[derive(Clone, Debug)]
pub struct QuasiRow<S: Scalar> {
    pub horizon: S,
    pub action: S,
    pub running_min: S,
}

/// Minimal action from the mutation fixed point `p` to `target` over a
/// schedule of horizons. The quasi-potential estimate is the running minimum,
/// which is monotone non-increasing by construction; the raw per-horizon
/// value is reported alongside.
pub fn quasi_potential<S: Scalar>(
    params: &Params<S>,
    v: Option<&Fitness<S>>,
    target: &Simplex<S>,
    horizons: &[S],
    knots: usize,
) -> std::result::Result<Vec<QuasiRow<S>>, MinimizeError<S>> {
    if horizons.is_empty() {
        return Err(MinimizeError::Invalid(CoreError::InvalidParams(
            "empty horizon schedule".into(),
        )));
    }
    let mut rows = Vec::with_capacity(horizons.len());
    let mut running = S::infinity();
    for &t in horizons {
        let mut spec = MinimizeSpec::new(params.p().clone(), target.clone(), t, knots);
        spec.with_selection = v.cloned();
        let res = minimize_action(params, &spec, None)?;
        running = running.min(res.action);
        rows.push(QuasiRow {
            horizon: t,
            action: res.action,
            running_min: running,
        });
    }
    Ok(rows)
}

/// Default horizon schedule: geometric growth brackets the quasi-potential
/// plateau cheaply.
pub fn default_horizons<S: Scalar>() -> Vec<S> {
    [1.0, 2.0, 5.0, 10.0, 20.0, 40.0].iter().map(|&t| S::of(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::{action_neutral, action_selective};
    use crate::path::{linear_path, neutral_flow_path};
    use rand::prelude::*;

    fn sp(w: &[f64]) -> Simplex<f64> {
        Simplex::new(w.to_vec()).unwrap()
    }

    fn params_half() -> Params<f64> {
        Params::new(1.0, sp(&[0.5, 0.5]), 0.5).unwrap()
    }

    fn random_interior_path(n: usize, steps: usize, seed: u64) -> Grid<f64> {
        let mut rng = StdRng::seed_from_u64(seed);
        let times = uniform_times(1.0, steps);
        let knots: Vec<Simplex<f64>> = (0..=steps)
            .map(|_| {
                let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.3).collect();
                Simplex::from_unnormalized(raw).unwrap()
            })
            .collect();
        Grid::new(times, knots).unwrap()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let params = params_half();
        let v = Fitness::from_rows(&[vec![0.7, -0.2], vec![-0.2, 0.3]]).unwrap();
        for sel in [None, Some(&v)] {
            let path = random_interior_path(2, 32, 17);
            let grad = action_gradient(&params, sel, &path).unwrap();

            let action_of = |path: &Grid<f64>| match sel {
                None => action_neutral(&params, path).unwrap(),
                Some(vm) => action_selective(&params, vm, path).unwrap(),
            };
            let h = 1e-6;
            let mut max_rel: f64 = 0.0;
            for j in 1..path.len() - 1 {
                let w = path.knot(j);
                let z0 = (w[0] / w[1]).ln();
                let perturbed = |z: f64| {
                    let e = z.exp();
                    let w0 = e / (1.0 + e);
                    let mut knots: Vec<Simplex<f64>> =
                        (0..path.len()).map(|i| path.knot_point(i)).collect();
                    knots[j] = sp(&[w0, 1.0 - w0]);
                    Grid::new(path.times().to_vec(), knots).unwrap()
                };
                let fd = (action_of(&perturbed(z0 + h)) - action_of(&perturbed(z0 - h)))
                    / (2.0 * h);
                let an = grad[j - 1][0];
                let rel = (an - fd).abs() / fd.abs().max(1e-8);
                max_rel = max_rel.max(rel);
            }
            assert!(max_rel < 1e-5, "max relative error {max_rel}");
        }
    }

    #[test]
    fn gradient_matches_central_differences_three_types() {
        let params = Params::new(0.8, Simplex::uniform(3), 0.5).unwrap();
        let v = Fitness::from_rows(&[
            vec![0.6, -0.3, 0.1],
            vec![-0.3, 0.4, 0.0],
            vec![0.1, 0.0, -0.2],
        ])
        .unwrap();
        let path = random_interior_path(3, 16, 23);
        let grad = action_gradient(&params, Some(&v), &path).unwrap();

        let h = 1e-6;
        let mut max_rel: f64 = 0.0;
        for j in 1..path.len() - 1 {
            let w = path.knot(j);
            let z0 = [(w[0] / w[2]).ln(), (w[1] / w[2]).ln()];
            for l in 0..2 {
                let eval = |delta: f64| {
                    let mut z = z0;
                    z[l] += delta;
                    let e0 = z[0].exp();
                    let e1 = z[1].exp();
                    let sum = e0 + e1 + 1.0;
                    let mut knots: Vec<Simplex<f64>> =
                        (0..path.len()).map(|i| path.knot_point(i)).collect();
                    knots[j] =
                        Simplex::new(vec![e0 / sum, e1 / sum, 1.0 / sum]).unwrap();
                    let g = Grid::new(path.times().to_vec(), knots).unwrap();
                    action_selective(&params, &v, &g).unwrap()
                };
                let fd = (eval(h) - eval(-h)) / (2.0 * h);
                let rel = (grad[j - 1][l] - fd).abs() / fd.abs().max(1e-8);
                max_rel = max_rel.max(rel);
            }
        }
        assert!(max_rel < 1e-5, "max relative error {max_rel}");
    }

    #[test]
    fn gradient_tiny_on_zero_cost_flow() {
        let params = params_half();
        let flow = neutral_flow_path(&params, &sp(&[0.8, 0.2]), 1.0, 1000).unwrap();
        let grad = action_gradient(&params, None, &flow).unwrap();
        let norm: f64 = grad
            .iter()
            .flat_map(|g| g.iter().map(|&x| x * x))
            .sum::<f64>()
            .sqrt();
        assert!(norm < 1e-6, "gradient norm on the flow: {norm}");
    }

    #[test]
    fn gradient_zero_at_fixed_point() {
        let params = params_half();
        let rest = linear_path(&sp(&[0.5, 0.5]), &sp(&[0.5, 0.5]), 1.0, 16).unwrap();
        let grad = action_gradient(&params, None, &rest).unwrap();
        let norm: f64 = grad
            .iter()
            .flat_map(|g| g.iter().map(|&x| x * x))
            .sum::<f64>()
            .sqrt();
        assert!(norm < 1e-10, "gradient norm at rest: {norm}");
    }

    #[test]
    fn gradient_rejects_boundary_paths() {
        let params = params_half();
        let path = linear_path(&sp(&[0.5, 0.5]), &sp(&[0.0, 1.0]), 1.0, 8).unwrap();
        assert!(matches!(
            action_gradient(&params, None, &path),
            Err(CoreError::BoundaryTouched)
        ));
    }

    #[test]
    fn trivial_endpoints_give_zero_action() {
        let params = params_half();
        let spec = MinimizeSpec::new(sp(&[0.5, 0.5]), sp(&[0.5, 0.5]), 2.0, 32);
        let res = minimize_action(&params, &spec, None).unwrap();
        assert!(res.action < 1e-8, "action = {}", res.action);
    }

    #[test]
    fn flow_endpoints_are_free() {
        let params = params_half();
        let start = sp(&[0.8, 0.2]);
        let t = 3.0;
        let flow = neutral_flow_path(&params, &start, t, 64).unwrap();
        let spec = MinimizeSpec::new(start, flow.end(), t, 64);
        let res = minimize_action(&params, &spec, None).unwrap();
        assert!(res.action < 1e-5, "action along the flow = {}", res.action);
    }

    #[test]
    fn quasi_potential_of_the_fixed_point_is_zero() {
        let params = params_half();
        let rows =
            quasi_potential(&params, None, &sp(&[0.5, 0.5]), &[1.0, 2.0, 5.0], 32).unwrap();
        for r in &rows {
            assert!(r.action < 1e-8, "T={}: action {}", r.horizon, r.action);
        }
    }

    #[test]
    fn monotone_quasi_potential_toward_entropy_value() {
        let params = params_half();
        let target = sp(&[0.8, 0.2]);
        let rows = quasi_potential(&params, None, &target, &[2.0, 5.0, 10.0, 20.0], 128).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].running_min <= w[0].running_min + 1e-9);
        }
        let plateau = rows.last().unwrap().running_min;
        let want = 0.2231435513;
        assert!(
            (plateau - want).abs() < 0.05 * want,
            "plateau {plateau} vs {want}"
        );
    }

    #[test]
    fn minimizer_keeps_endpoints_and_interior() {
        let params = params_half();
        let spec = MinimizeSpec::new(sp(&[0.5, 0.5]), sp(&[0.7, 0.3]), 5.0, 64);
        let res = minimize_action(&params, &spec, None).unwrap();
        assert_eq!(res.path.knot(0), &[0.5, 0.5]);
        let end = res.path.end();
        assert!((end.get(0) - 0.7).abs() < 1e-12);
        for j in 0..res.path.len() {
            assert!(res.path.knot(j).iter().all(|&x| x > 0.0));
        }
        // refinement gate: doubling the knot count moves the action < 1%
        let spec2 = MinimizeSpec::new(sp(&[0.5, 0.5]), sp(&[0.7, 0.3]), 5.0, 128);
        let res2 = minimize_action(&params, &spec2, None).unwrap();
        assert!(
            (res.action - res2.action).abs() < 0.01 * res.action,
            "{} vs {}",
            res.action,
            res2.action
        );
    }
}
