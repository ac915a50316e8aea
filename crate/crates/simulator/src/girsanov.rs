//! Change-of-measure log-weight between the neutral and selective path laws.

use crate::sim::Trajectory;
use crate::{Result, SimError};
use wfld_core::{FitnessMatrix, ModelParams};

/// Log weight `G_V / gamma` of a neutral trajectory, where
/// `G_V = sum_s (V x_s)' dM_s - (1/2) sum_s (V x_s)' D(x_s) (V x_s) dt`
/// on the recorded grid, with the discrete martingale increment
/// `dM_s = dx_s - b(x_s) dt` evaluated at the left endpoint.
///
/// Orientation (verified empirically by the cross-simulation tests):
/// `exp(G_V / gamma)` reweights neutral-law path expectations into
/// selective-law expectations, i.e. it is the density of the selective law
/// with respect to the neutral one on the recorded grid.
pub fn girsanov_log_weight(
    params: &ModelParams,
    v: &FitnessMatrix,
    traj: &Trajectory,
) -> Result<f64> {
    let n = params.dim();
    if traj.grid.dim() != n {
        return Err(SimError::Mismatch(format!(
            "trajectory dimension {} vs model {}",
            traj.grid.dim(),
            n
        )));
    }
    if v.dim() != n {
        return Err(SimError::Core(wfld_core::CoreError::DimensionMismatch {
            left: v.dim(),
            right: n,
        }));
    }
    let half_theta = 0.5 * params.theta();
    let times = traj.grid.times();
    let mut g = 0.0;
    for s in 0..traj.grid.steps() {
        let dt = times[s + 1] - times[s];
        let x = traj.grid.knot(s);
        let x_next = traj.grid.knot(s + 1);
        let vx = v.times(x);

        let mut pairing = 0.0;
        let mut mean = 0.0;
        let mut second = 0.0;
        for i in 0..n {
            let dm = x_next[i] - x[i] - half_theta * (params.p().get(i) - x[i]) * dt;
            pairing += vx[i] * dm;
            mean += x[i] * vx[i];
            second += x[i] * vx[i] * vx[i];
        }
        let quad = second - mean * mean;
        g += pairing - 0.5 * quad * dt;
    }
    Ok(g / params.gamma())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate_batch, SimConfig};
    use wfld_core::simplex::Simplex;
    use wfld_core::SimplexPoint;

    fn sp(w: &[f64]) -> SimplexPoint {
        Simplex::new(w.to_vec()).unwrap()
    }

    fn params(theta: f64, p: &[f64], gamma: f64) -> ModelParams {
        ModelParams::new(theta, Simplex::new(p.to_vec()).unwrap(), gamma).unwrap()
    }

    #[test]
    fn zero_fitness_gives_zero_weight() {
        let pr = params(1.0, &[0.5, 0.5], 0.5);
        let cfg = SimConfig::new(1e-3, 1.0, 1, 1);
        let trajs = simulate_batch(&pr, None, &cfg, &sp(&[0.5, 0.5]), 5).unwrap();
        let v = FitnessMatrix::zero(2);
        for t in &trajs {
            assert_eq!(girsanov_log_weight(&pr, &v, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_fitness_gives_zero_weight() {
        // V x is a constant vector: the pairing telescopes against zero-sum
        // increments and the covariance annihilates constants
        let pr = params(1.0, &[0.5, 0.5], 0.5);
        let cfg = SimConfig::new(1e-3, 1.0, 1, 2);
        let trajs = simulate_batch(&pr, None, &cfg, &sp(&[0.4, 0.6]), 5).unwrap();
        let v = FitnessMatrix::constant(2, 3.0);
        for t in &trajs {
            let g = girsanov_log_weight(&pr, &v, t).unwrap();
            assert!(g.abs() < 1e-9, "constant fitness weight {g}");
        }
    }

    #[test]
    fn weights_are_normalized_in_mean() {
        // E[exp(G_V / gamma)] = 1 under the neutral law
        let pr = params(1.0, &[0.5, 0.5], 0.5);
        let v = FitnessMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let cfg = SimConfig::new(1e-3, 1.0, 1, 31);
        let count = 20_000;
        let trajs = simulate_batch(&pr, None, &cfg, &sp(&[0.5, 0.5]), count).unwrap();
        let ws: Vec<f64> = trajs
            .iter()
            .map(|t| girsanov_log_weight(&pr, &v, t).unwrap().exp())
            .collect();
        let mean: f64 = ws.iter().sum::<f64>() / count as f64;
        let var: f64 =
            ws.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / (count - 1) as f64;
        let se = (var / count as f64).sqrt();
        assert!(
            (mean - 1.0).abs() < 3.0 * se,
            "mean weight {mean}, se {se}"
        );
    }

    #[test]
    fn reweighted_neutral_matches_selective() {
        let pr = params(1.0, &[0.5, 0.5], 0.5);
        let v = FitnessMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let cfg_n = SimConfig::new(1e-3, 1.0, 1, 400);
        let cfg_s = SimConfig::new(1e-3, 1.0, 1, 401);
        let start = sp(&[0.5, 0.5]);
        let count = 30_000;

        let neutral = simulate_batch(&pr, None, &cfg_n, &start, count).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for t in &neutral {
            let w = girsanov_log_weight(&pr, &v, t).unwrap().exp();
            num += w * t.terminal().get(0);
            den += w;
        }
        let reweighted = num / den;

        let selective = simulate_batch(&pr, Some(&v), &cfg_s, &start, count).unwrap();
        let direct: f64 =
            selective.iter().map(|t| t.terminal().get(0)).sum::<f64>() / count as f64;

        assert!(
            (reweighted - direct).abs() / direct < 0.05,
            "reweighted {reweighted} vs direct {direct}"
        );
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let pr = params(1.0, &[0.5, 0.5], 0.5);
        let cfg = SimConfig::new(1e-2, 0.1, 1, 0);
        let traj = simulate_batch(&pr, None, &cfg, &sp(&[0.5, 0.5]), 1)
            .unwrap()
            .pop()
            .unwrap();
        let v3 = FitnessMatrix::zero(3);
        assert!(girsanov_log_weight(&pr, &v3, &traj).is_err());

        let pr3 = params(1.0, &[0.3, 0.3, 0.4], 0.5);
        let v = FitnessMatrix::zero(3);
        assert!(matches!(
            girsanov_log_weight(&pr3, &v, &traj),
            Err(SimError::Mismatch(_))
        ));
    }
}
