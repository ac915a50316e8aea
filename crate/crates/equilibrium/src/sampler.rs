//! Monte Carlo draws from the stationary law and its tilted version.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use crate::{EquilibriumError, Result};
use wfld_core::drift::mean_fitness;
use wfld_core::rng::stream;
use wfld_core::{FitnessMatrix, ModelParams, SimplexPoint};

/// A batch of equilibrium draws with (importance) weights.
///
/// Weights are all one for plain draws; tilted draws carry self-normalized
/// weights proportional to `exp(V(x)/gamma)` scaled so the largest is one.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    pub points: Vec<SimplexPoint>,
    pub weights: Vec<f64>,
    pub seed: u64,
    pub theta: f64,
    pub gamma: f64,
    pub p: SimplexPoint,
    /// Effective sample size `(sum w)^2 / sum w^2`.
    pub ess: f64,
    /// Set when the weights have degenerated (ESS below 1% of the batch).
    pub weight_degeneracy_warning: bool,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Self-normalized weighted mean of a statistic.
    pub fn weighted_mean(&self, stat: impl Fn(&SimplexPoint) -> f64 + Sync) -> f64 {
        let num: f64 = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(x, &w)| w * stat(x))
            .sum();
        let den: f64 = self.weights.iter().sum();
        num / den
    }
}

/// One Dirichlet draw via independent Gamma(theta p_i / gamma) variables
/// normalized by their sum. Coordinates with `p_i = 0` are pinned at exact
/// zero, matching the product-with-point-mass form of the stationary law on
/// degenerate support.
fn draw_point(params: &ModelParams, rng: &mut impl Rng) -> SimplexPoint {
    let n = params.dim();
    let scale = params.theta() / params.gamma();
    let mut raw = vec![0.0f64; n];
    let mut sum = 0.0;
    for i in 0..n {
        let pi = params.p().get(i);
        if pi == 0.0 {
            continue;
        }
        let g = Gamma::new(scale * pi, 1.0).expect("positive shape");
        let x: f64 = g.sample(rng);
        raw[i] = x;
        sum += x;
    }
    for x in raw.iter_mut() {
        *x /= sum;
    }
    SimplexPoint::new(raw).expect("normalized gamma vector is a simplex point")
}

/// `count` independent draws from the stationary law, deterministic in
/// `(seed, count, params)` and independent of thread scheduling (each draw
/// index owns a counter-based stream).
pub fn dirichlet_sample(params: &ModelParams, count: usize, seed: u64) -> Result<SampleBatch> {
    if count == 0 {
        return Err(EquilibriumError::Invalid("count must be at least 1".into()));
    }
    let points: Vec<SimplexPoint> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            draw_point(params, &mut rng)
        })
        .collect();
    Ok(SampleBatch {
        weights: vec![1.0; count],
        seed,
        theta: params.theta(),
        gamma: params.gamma(),
        p: params.p().clone(),
        ess: count as f64,
        weight_degeneracy_warning: false,
        points,
    })
}

/// Importance draws for the tilted law: Dirichlet proposals with weights
/// proportional to `exp(V(x)/gamma)`.
pub fn tilted_sample(
    params: &ModelParams,
    v: &FitnessMatrix,
    count: usize,
    seed: u64,
) -> Result<SampleBatch> {
    if !params.p().is_interior() {
        return Err(EquilibriumError::DegenerateSupport);
    }
    let mut batch = dirichlet_sample(params, count, seed)?;
    let log_w: Vec<f64> = batch
        .points
        .par_iter()
        .map(|x| mean_fitness(v, x).expect("dimensions checked") / params.gamma())
        .collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_w.iter().map(|&lw| (lw - max).exp()).collect();
    let sum: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    let ess = sum * sum / sum_sq;
    batch.weights = weights;
    batch.ess = ess;
    batch.weight_degeneracy_warning = ess < 0.01 * count as f64;
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::dirichlet_log_density;
    use crate::quad::adaptive_gk;
    use wfld_core::simplex::Simplex;

    fn params(theta: f64, p: &[f64], gamma: f64) -> ModelParams {
        ModelParams::new(theta, Simplex::new(p.to_vec()).unwrap(), gamma).unwrap()
    }

    #[test]
    fn deterministic_given_seed() {
        let pr = params(1.0, &[0.3, 0.7], 0.4);
        let a = dirichlet_sample(&pr, 500, 9).unwrap();
        let b = dirichlet_sample(&pr, 500, 9).unwrap();
        for (x, y) in a.points.iter().zip(&b.points) {
            assert_eq!(x.weights(), y.weights());
        }
        let c = dirichlet_sample(&pr, 500, 10).unwrap();
        assert!(a.points[0].weights() != c.points[0].weights());
    }

    #[test]
    fn degenerate_support_is_exact() {
        let pr = params(2.0, &[1.0, 0.0], 0.3);
        let batch = dirichlet_sample(&pr, 200, 5).unwrap();
        for x in &batch.points {
            assert_eq!(x.weights(), &[1.0, 0.0]);
        }

        let pr3 = params(1.5, &[0.6, 0.0, 0.4], 0.2);
        let batch = dirichlet_sample(&pr3, 500, 6).unwrap();
        for x in &batch.points {
            assert_eq!(x.get(1), 0.0);
            assert!(x.abs_continuous_wrt(pr3.p()).unwrap());
        }
    }

    #[test]
    fn uniform_marginal_passes_ks() {
        // theta p_1 / gamma = 1 on both coordinates: the first coordinate is
        // Beta(1,1), i.e. uniform on [0,1]
        let pr = params(1.0, &[0.5, 0.5], 0.5);
        let n = 100_000usize;
        let batch = dirichlet_sample(&pr, n, 123).unwrap();
        let mut xs: Vec<f64> = batch.points.iter().map(|x| x.get(0)).collect();
        xs.sort_by(f64::total_cmp);
        let mut d: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            d = d.max((x - lo).abs()).max((hi - x).abs());
        }
        // critical value at the 1e-3 level: sqrt(ln(2/alpha)/(2n))
        let crit = ((2.0f64 / 1e-3).ln() / (2.0 * n as f64)).sqrt();
        assert!(d < crit, "KS statistic {d} exceeds critical value {crit}");
    }

    #[test]
    fn empirical_mean_matches_p() {
        // the mean of the stationary law is p; cross-checked by quadrature
        // for n = 2 through the event-probability oracle
        let pr = params(1.3, &[0.35, 0.65], 0.45);
        let n = 40_000usize;
        let batch = dirichlet_sample(&pr, n, 77).unwrap();
        for i in 0..2 {
            let mean: f64 = batch.points.iter().map(|x| x.get(i)).sum::<f64>() / n as f64;
            let pi = pr.p().get(i);
            // Dirichlet marginal variance: p_i (1 - p_i) / (theta/gamma + 1)
            let var = pi * (1.0 - pi) / (pr.theta() / pr.gamma() + 1.0);
            let se = (var / n as f64).sqrt();
            assert!(
                (mean - pi).abs() < 4.0 * se,
                "coordinate {i}: mean {mean} vs p {pi} (se {se})"
            );
        }

        // quadrature check of the same identity: the stationary mean is p
        let quad_mean = adaptive_gk(
            &|x: f64| {
                let pt = Simplex::new(vec![x, 1.0 - x]).unwrap();
                x * dirichlet_log_density(&pr, &pt).unwrap().exp()
            },
            1e-12,
            1.0 - 1e-12,
            1e-10,
        );
        assert!(
            (quad_mean - pr.p().get(0)).abs() < 1e-8,
            "quadrature mean {quad_mean}"
        );
    }

    #[test]
    fn tilted_weights_flat_for_zero_fitness() {
        let pr = params(1.0, &[0.5, 0.5], 0.5);
        let v = FitnessMatrix::zero(2);
        let batch = tilted_sample(&pr, &v, 1000, 3).unwrap();
        for &w in &batch.weights {
            assert!((w - 1.0).abs() < 1e-15);
        }
        assert!((batch.ess - 1000.0).abs() < 1e-9);
        assert!(!batch.weight_degeneracy_warning);
    }

    #[test]
    fn tilted_mean_matches_quadrature() {
        let pr = params(1.0, &[0.5, 0.5], 0.5);
        let v = FitnessMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        // quadrature value of E_tilted[x_1]: ratio of two tilted integrals
        let tilted_kernel = |x: f64| {
            let pt = Simplex::new(vec![x, 1.0 - x]).unwrap();
            let base = dirichlet_log_density(&pr, &pt).unwrap();
            let fit = mean_fitness(&v, &pt).unwrap() / pr.gamma();
            (base + fit).exp()
        };
        let z = adaptive_gk(&|x| tilted_kernel(x), 1e-12, 1.0 - 1e-12, 1e-10);
        let want = adaptive_gk(&|x| x * tilted_kernel(x), 1e-12, 1.0 - 1e-12, 1e-10) / z;

        // the self-normalized estimate converges to the quadrature value
        // over an increasing count at the same seed stream
        let mut last_err = f64::INFINITY;
        for &n in &[4_000usize, 16_000, 64_000] {
            let batch = tilted_sample(&pr, &v, n, 2024).unwrap();
            let est = batch.weighted_mean(|x| x.get(0));
            let wsum: f64 = batch.weights.iter().sum();
            let centered: f64 = batch
                .points
                .iter()
                .zip(&batch.weights)
                .map(|(x, &w)| (w * (x.get(0) - est)).powi(2))
                .sum();
            let se = centered.sqrt() / wsum;
            assert!(
                (est - want).abs() < 3.0 * se + 1e-3,
                "n={n}: tilted mean {est} vs quadrature {want} (se {se})"
            );
            last_err = (est - want).abs().min(last_err);
        }
        assert!(last_err < 3e-3, "estimates never got close: {last_err}");
    }

    #[test]
    fn ess_shrinks_as_gamma_drops() {
        let v = FitnessMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let mut drops = 0;
        let mut mean_hi = 0.0;
        let mut mean_lo = 0.0;
        for seed in 0..20u64 {
            let hi = tilted_sample(&params(1.0, &[0.5, 0.5], 0.4), &v, 2000, seed).unwrap();
            let lo = tilted_sample(&params(1.0, &[0.5, 0.5], 0.2), &v, 2000, seed).unwrap();
            if lo.ess <= hi.ess {
                drops += 1;
            }
            mean_hi += hi.ess / 20.0;
            mean_lo += lo.ess / 20.0;
        }
        // sharper tilt concentrates the weights; empirical check only
        assert!(drops >= 15, "ESS dropped in only {drops}/20 seeds");
        assert!(mean_lo < mean_hi);
    }
}
