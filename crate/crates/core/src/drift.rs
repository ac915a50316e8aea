//! Mutation and selection drifts and the sampling covariance.

use crate::error::Result;
use crate::model::{Fitness, Params};
use crate::scalar::Scalar;
use crate::simplex::{check_dims, Simplex, ZeroSum};

/// Parent-independent mutation drift `b_i = (theta/2)(p_i - x_i)`.
pub fn mutation_drift<S: Scalar>(params: &Params<S>, x: &Simplex<S>) -> Result<ZeroSum<S>> {
    check_dims(params.dim(), x.dim())?;
    let half_theta = params.theta() * S::half();
    let b = params
        .p()
        .weights()
        .iter()
        .zip(x.weights())
        .map(|(&pi, &xi)| half_theta * (pi - xi))
        .collect();
    ZeroSum::new(b)
}

/// Replicator-type selection drift `r_i = x_i [ (Vx)_i - x'Vx ]`.
///
/// Equals `D(x) Vx` with `D` the sampling covariance, which is how it enters
/// the generator; the componentwise form is cheaper and exactly zero-sum.
pub fn selection_drift<S: Scalar>(v: &Fitness<S>, x: &Simplex<S>) -> Result<ZeroSum<S>> {
    check_dims(v.dim(), x.dim())?;
    let vx = v.times(x.weights());
    let mean: S = x.weights().iter().zip(&vx).map(|(&xi, &g)| xi * g).sum();
    let r = x
        .weights()
        .iter()
        .zip(&vx)
        .map(|(&xi, &g)| xi * (g - mean))
        .collect();
    ZeroSum::new(r)
}

/// Mean fitness `x' V x`.
pub fn mean_fitness<S: Scalar>(v: &Fitness<S>, x: &Simplex<S>) -> Result<S> {
    check_dims(v.dim(), x.dim())?;
    let vx = v.times(x.weights());
    Ok(x.weights().iter().zip(&vx).map(|(&xi, &g)| xi * g).sum())
}

/// Full `n x n` sampling covariance `D(x)_{kl} = x_k (delta_{kl} - x_l)`,
/// row-major. Annihilates constant vectors; vanishes coordinatewise on the
/// boundary.
pub fn covariance<S: Scalar>(x: &Simplex<S>) -> Vec<S> {
    let n = x.dim();
    let w = x.weights();
    let mut d = vec![S::zero(); n * n];
    for k in 0..n {
        for l in 0..n {
            let delta = if k == l { S::one() } else { S::zero() };
            d[k * n + l] = w[k] * (delta - w[l]);
        }
    }
    d
}

/// `D(x) w` without materializing the matrix.
pub fn apply_covariance<S: Scalar>(x: &Simplex<S>, w: &[S]) -> Vec<S> {
    assert_eq!(x.dim(), w.len());
    let xv = x.weights();
    let mean: S = xv.iter().zip(w).map(|(&xi, &wi)| xi * wi).sum();
    xv.iter().zip(w).map(|(&xi, &wi)| xi * (wi - mean)).collect()
}

/// Quadratic form `w' D(x) w`.
pub fn covariance_quadratic<S: Scalar>(x: &Simplex<S>, w: &[S]) -> S {
    assert_eq!(x.dim(), w.len());
    let xv = x.weights();
    let mean: S = xv.iter().zip(w).map(|(&xi, &wi)| xi * wi).sum();
    let second: S = xv.iter().zip(w).map(|(&xi, &wi)| xi * wi * wi).sum();
    second - mean * mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;

    fn sp(w: &[f64]) -> Simplex<f64> {
        Simplex::new(w.to_vec()).unwrap()
    }

    #[test]
    fn mutation_drift_examples() {
        let params = Params::new(1.0, sp(&[0.5, 0.5]), 0.5).unwrap();
        let b = mutation_drift(&params, &sp(&[0.5, 0.5])).unwrap();
        assert_eq!(b.components(), &[0.0, 0.0]);

        let b = mutation_drift(&params, &sp(&[0.8, 0.2])).unwrap();
        assert!((b.get(0) + 0.15).abs() < 1e-15);
        assert!((b.get(1) - 0.15).abs() < 1e-15);

        let params2 = Params::new(2.0, sp(&[0.3, 0.7]), 0.5).unwrap();
        let b = mutation_drift(&params2, &sp(&[0.7, 0.3])).unwrap();
        assert!((b.get(0) + 0.4).abs() < 1e-15);
        assert!((b.get(1) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn selection_drift_examples() {
        // constant fitness produces no drift
        let v = Fitness::constant(3, 2.5);
        let x = sp(&[0.2, 0.3, 0.5]);
        let r = selection_drift(&v, &x).unwrap();
        for &ri in r.components() {
            assert!(ri.abs() < 1e-15);
        }

        // symmetric interior fixed point of the identity matrix
        let id = Fitness::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = selection_drift(&id, &sp(&[0.5, 0.5])).unwrap();
        assert_eq!(r.components(), &[0.0, 0.0]);

        let v = Fitness::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let r = selection_drift(&v, &sp(&[0.5, 0.5])).unwrap();
        assert!((r.get(0) - 0.125).abs() < 1e-15);
        assert!((r.get(1) + 0.125).abs() < 1e-15);
    }

    #[test]
    fn mean_fitness_examples() {
        let z = Fitness::zero(2);
        assert_eq!(mean_fitness(&z, &sp(&[0.4, 0.6])).unwrap(), 0.0);

        let id = Fitness::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((mean_fitness(&id, &sp(&[0.5, 0.5])).unwrap() - 0.5).abs() < 1e-15);

        let off = Fitness::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!((mean_fitness(&off, &sp(&[0.3, 0.7])).unwrap() - 0.42).abs() < 1e-15);
    }

    #[test]
    fn selection_drift_is_covariance_times_gradient() {
        let mut rng = StdRng::seed_from_u64(11);
        for n in 2..=6usize {
            for _ in 0..50 {
                let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
                let x = Simplex::from_unnormalized(raw).unwrap();
                let mut rows = vec![vec![0.0; n]; n];
                for i in 0..n {
                    for j in i..n {
                        let e = rng.random_range(-1.0..1.0);
                        rows[i][j] = e;
                        rows[j][i] = e;
                    }
                }
                let v = Fitness::from_rows(&rows).unwrap();
                let r = selection_drift(&v, &x).unwrap();
                let dvx = apply_covariance(&x, &v.times(x.weights()));
                for i in 0..n {
                    assert!(
                        (r.get(i) - dvx[i]).abs() < 1e-12,
                        "n={n} i={i}: {} vs {}",
                        r.get(i),
                        dvx[i]
                    );
                }
            }
        }
    }

    #[test]
    fn covariance_annihilates_constants() {
        let x = sp(&[0.2, 0.3, 0.5]);
        let d = covariance(&x);
        for k in 0..3 {
            let row_sum: f64 = (0..3).map(|l| d[k * 3 + l]).sum();
            assert!(row_sum.abs() < 1e-15);
        }
        let applied = apply_covariance(&x, &[4.0, 4.0, 4.0]);
        for a in applied {
            assert!(a.abs() < 1e-15);
        }
    }
}
