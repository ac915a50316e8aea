//! Sup-norm tube probabilities around a reference path.

use crate::{HarnessError, Result};
use wfld_core::{ModelParams, PathGrid};
use wfld_equilibrium::wilson_interval;
use wfld_sim::{simulate_batch, SimConfig};

#[derive(Clone, Debug)]
pub struct TubeEstimate {
    pub gamma: f64,
    pub trials: u64,
    pub hits: u64,
    pub prob: f64,
    /// Wilson 95% interval on the probability.
    pub ci: (f64, f64),
    /// `gamma * ln prob`; the Wilson upper bound is substituted (and
    /// flagged) when no path stayed in the tube.
    pub gamma_log_prob: f64,
    pub zero_hits: bool,
}

const Z95: f64 = 1.959963984540054;

/// Fraction of neutral trajectories staying within sup-norm `delta` of
/// `center` at every recorded time. Membership is checked at recorded knots
/// only, a stride-resolution discretization of the sup-norm event.
pub fn estimate_tube_probability(
    params: &ModelParams,
    cfg: &SimConfig,
    center: &PathGrid,
    delta: f64,
    trajectories: usize,
    seed: u64,
) -> Result<TubeEstimate> {
    if !(delta > 0.0) {
        return Err(HarnessError::Config(format!(
            "tube radius must be positive, got {delta}"
        )));
    }
    if trajectories == 0 {
        return Err(HarnessError::Config("need at least one trajectory".into()));
    }
    if center.dim() != params.dim() {
        return Err(HarnessError::Config(format!(
            "center path dimension {} does not match the model ({})",
            center.dim(),
            params.dim()
        )));
    }
    // the center must live exactly on the recording grid
    let steps = cfg.steps();
    let records = steps / cfg.record_stride.max(1) + 1;
    if center.len() != records {
        return Err(HarnessError::Config(format!(
            "center path has {} knots but the sim records {records}",
            center.len()
        )));
    }
    for (r, &t) in center.times().iter().enumerate() {
        let want = (r * cfg.record_stride) as f64 * cfg.dt;
        if (t - want).abs() > 1e-9 * want.max(1.0) {
            return Err(HarnessError::Config(format!(
                "center path time {t} at knot {r} does not sit on the recording grid ({want})"
            )));
        }
    }

    let mut run_cfg = cfg.clone();
    run_cfg.seed = seed;
    let start = center.start();
    let trajs = simulate_batch(params, None, &run_cfg, &start, trajectories)
        .map_err(|e| HarnessError::Numerical(e.to_string()))?;

    let mut hits = 0u64;
    for t in &trajs {
        let mut inside = true;
        'knots: for r in 0..records {
            let sim_row = t.grid.knot(r);
            let ref_row = center.knot(r);
            for i in 0..params.dim() {
                if (sim_row[i] - ref_row[i]).abs() > delta {
                    inside = false;
                    break 'knots;
                }
            }
        }
        if inside {
            hits += 1;
        }
    }

    let prob = hits as f64 / trajectories as f64;
    let ci = wilson_interval(hits, trajectories as u64, Z95);
    let zero = hits == 0;
    let gamma = params.gamma();
    let gamma_log_prob = if zero {
        gamma * ci.1.ln()
    } else {
        gamma * prob.ln()
    };
    Ok(TubeEstimate {
        gamma,
        trials: trajectories as u64,
        hits,
        prob,
        ci,
        gamma_log_prob,
        zero_hits: zero,
    })
}
