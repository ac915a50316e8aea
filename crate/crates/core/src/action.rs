//! Discretized path action functionals.
//!
//! All quadrature is midpoint-rule on the piecewise-linear interpolation:
//! velocities are knot differences, states are knot midpoints. Keeping one
//! fixed rule makes the algebraic identities between the neutral action, the
//! selective action and the drift-difference functional hold exactly at the
//! discrete level, so refinement error is isolated in a single knob.

use crate::error::Result;
use crate::model::{Fitness, Params};
use crate::path::Grid;
use crate::scalar::Scalar;
use crate::simplex::check_dims;

/// True when every coordinate carrying mutation mass is strictly positive.
#[inline]
fn knot_admissible<S: Scalar>(p: &[S], knot: &[S]) -> bool {
    p.iter().zip(knot).all(|(&pi, &xi)| pi == S::zero() || xi > S::zero())
}

/// Action contribution of one linear segment `a -> b` over `dt`.
///
/// `+inf` when a knot hits zero inside the support of `p`, when a midpoint
/// leaves the support region, or when mass outside the support moves.
pub fn step_action<S: Scalar>(
    params: &Params<S>,
    v: Option<&Fitness<S>>,
    a: &[S],
    b: &[S],
    dt: S,
) -> S {
    let p = params.p().weights();
    let n = p.len();
    if !knot_admissible(p, a) || !knot_admissible(p, b) {
        return S::infinity();
    }
    let half = S::half();
    let half_theta = params.theta() * half;

    // selection term needs the whole midpoint state; the neutral case is a
    // single allocation-free pass
    let vmid = v.map(|vm| {
        let mid: Vec<S> = (0..n).map(|i| (a[i] + b[i]) * half).collect();
        let g = vm.times(&mid);
        let mean: S = mid.iter().zip(&g).map(|(&m, &gi)| m * gi).sum();
        (g, mean)
    });

    let mut acc = S::zero();
    for i in 0..n {
        let mid = (a[i] + b[i]) * half;
        let vel = (b[i] - a[i]) / dt;
        if p[i] == S::zero() {
            // off-support coordinates may carry mass but must not move
            if vel != S::zero() {
                return S::infinity();
            }
        } else if mid <= S::zero() {
            return S::infinity();
        }
        let mut drift = half_theta * (p[i] - mid);
        if let Some((g, mean)) = &vmid {
            drift += mid * (g[i] - *mean);
        }
        let u = vel - drift;
        if mid == S::zero() {
            if u != S::zero() {
                return S::infinity();
            }
            continue;
        }
        acc += u * u / mid;
    }
    acc * half * dt
}

fn total_action<S: Scalar>(
    params: &Params<S>,
    v: Option<&Fitness<S>>,
    path: &Grid<S>,
) -> Result<S> {
    check_dims(params.dim(), path.dim())?;
    let times = path.times();
    let mut acc = S::zero();
    for s in 0..path.steps() {
        let dt = times[s + 1] - times[s];
        let cost = step_action(params, v, path.knot(s), path.knot(s + 1), dt);
        if cost.is_infinite() {
            return Ok(S::infinity());
        }
        acc += cost;
    }
    Ok(acc)
}

/// Neutral path action: midpoint discretization of
/// `(1/2) int sum_i (phidot_i - b_i(phi))^2 / phi_i dt`.
pub fn action_neutral<S: Scalar>(params: &Params<S>, path: &Grid<S>) -> Result<S> {
    total_action(params, None, path)
}

/// Selective path action: the drift gains the replicator term `r(phi)`.
pub fn action_selective<S: Scalar>(
    params: &Params<S>,
    v: &Fitness<S>,
    path: &Grid<S>,
) -> Result<S> {
    check_dims(v.dim(), path.dim())?;
    total_action(params, Some(v), path)
}

/// Drift-difference functional
/// `int <phidot - b(phi), V phi> dt - (1/2) int (V phi)' D(phi) (V phi) dt`
/// on the same midpoint rule. For symmetric `V` this telescopes the
/// endpoint form of the change-of-measure exponent, and under midpoint
/// quadrature it satisfies `action_neutral - gamma_v = action_selective`
/// exactly at every node.
pub fn gamma_v<S: Scalar>(params: &Params<S>, v: &Fitness<S>, path: &Grid<S>) -> Result<S> {
    check_dims(params.dim(), path.dim())?;
    check_dims(v.dim(), path.dim())?;
    let p = params.p().weights();
    let n = p.len();
    let half_theta = params.theta() * S::half();
    let times = path.times();

    let mut acc = S::zero();
    for s in 0..path.steps() {
        let dt = times[s + 1] - times[s];
        let a = path.knot(s);
        let b = path.knot(s + 1);
        let mut pairing = S::zero();
        let mut mid = vec![S::zero(); n];
        for i in 0..n {
            mid[i] = (a[i] + b[i]) * S::half();
        }
        let g = v.times(&mid);
        let mut quad_mean = S::zero();
        let mut quad_second = S::zero();
        for i in 0..n {
            let vel = (b[i] - a[i]) / dt;
            let drift = half_theta * (p[i] - mid[i]);
            pairing += (vel - drift) * g[i];
            quad_mean += mid[i] * g[i];
            quad_second += mid[i] * g[i] * g[i];
        }
        let quad = quad_second - quad_mean * quad_mean;
        acc += dt * (pairing - quad * S::half());
    }
    Ok(acc)
}

/// Cumulative action up to each knot time.
///
/// For a path that reaches the boundary at some time, entries before that
/// time stay finite and grow without bound as the grid refines toward it;
/// entries from the first inadmissible segment on are `+inf`.
pub fn boundary_blowup_profile<S: Scalar>(
    params: &Params<S>,
    path: &Grid<S>,
) -> Result<Vec<(S, S)>> {
    check_dims(params.dim(), path.dim())?;
    let times = path.times();
    let mut out = Vec::with_capacity(path.len());
    out.push((times[0], S::zero()));
    let mut acc = S::zero();
    for s in 0..path.steps() {
        let dt = times[s + 1] - times[s];
        if acc.is_finite() {
            acc += step_action(params, None, path.knot(s), path.knot(s + 1), dt);
        }
        out.push((times[s + 1], acc));
    }
    Ok(out)
}
