//! The dual norm on tangent directions.

use crate::error::Result;
use crate::scalar::Scalar;
use crate::simplex::{check_dims, Simplex, ZeroSum};

/// Squared dual norm `(1/2) sum_i theta_i^2 / mu_i`.
///
/// Conventions: `0/0 = 0` and `c/0 = +inf` for `c != 0` (mass escaping the
/// support has infinite cost). This is the Legendre transform of
/// `f -> (1/2) f' D(mu) f` evaluated at a zero-sum direction.
pub fn dual_norm_sq<S: Scalar>(mu: &Simplex<S>, theta_vec: &ZeroSum<S>) -> Result<S> {
    check_dims(mu.dim(), theta_vec.dim())?;
    let mut acc = S::zero();
    for (&m, &t) in mu.weights().iter().zip(theta_vec.components()) {
        if m == S::zero() {
            if t != S::zero() {
                return Ok(S::infinity());
            }
            continue;
        }
        acc += t * t / m;
    }
    Ok(acc * S::half())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::{covariance, covariance_quadratic};
    use rand::prelude::*;

    fn sp(w: &[f64]) -> Simplex<f64> {
        Simplex::new(w.to_vec()).unwrap()
    }

    fn zs(c: &[f64]) -> ZeroSum<f64> {
        ZeroSum::new(c.to_vec()).unwrap()
    }

    #[test]
    fn examples() {
        let mu = sp(&[0.5, 0.5]);
        assert_eq!(dual_norm_sq(&mu, &zs(&[0.0, 0.0])).unwrap(), 0.0);
        assert!((dual_norm_sq(&mu, &zs(&[0.3, -0.3])).unwrap() - 0.18).abs() < 1e-15);
        let boundary = sp(&[1.0, 0.0]);
        assert!(dual_norm_sq(&boundary, &zs(&[0.1, -0.1])).unwrap().is_infinite());
    }

    /// Independent oracle for the Legendre form: maximize
    /// `theta'f - (1/2) f'D(mu)f` over f by solving the stationarity system
    /// `D(mu) f = theta` with a generic pivoted elimination in the gauge
    /// `f_n = 0`, then evaluate the objective directly.
    fn legendre_sup(mu: &Simplex<f64>, theta: &ZeroSum<f64>) -> f64 {
        let n = mu.dim();
        let d = covariance(mu);
        // reduced system on the first n-1 coordinates (gauge f_n = 0)
        let m = n - 1;
        let mut a = vec![0.0; m * m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            rhs[i] = theta.get(i);
            for j in 0..m {
                a[i * m + j] = d[i * n + j];
            }
        }
        // partial-pivot Gauss elimination
        for col in 0..m {
            let (piv, _) = (col..m)
                .map(|r| (r, a[r * m + col].abs()))
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            if piv != col {
                for j in 0..m {
                    a.swap(col * m + j, piv * m + j);
                }
                rhs.swap(col, piv);
            }
            let pv = a[col * m + col];
            for r in (col + 1)..m {
                let factor = a[r * m + col] / pv;
                for j in col..m {
                    a[r * m + j] -= factor * a[col * m + j];
                }
                rhs[r] -= factor * rhs[col];
            }
        }
        let mut f = vec![0.0; m];
        for r in (0..m).rev() {
            let mut s = rhs[r];
            for j in (r + 1)..m {
                s -= a[r * m + j] * f[j];
            }
            f[r] = s / a[r * m + r];
        }
        let mut f_full = f;
        f_full.push(0.0);
        let lin: f64 = theta
            .components()
            .iter()
            .zip(&f_full)
            .map(|(&t, &fi)| t * fi)
            .sum();
        lin - 0.5 * covariance_quadratic(mu, &f_full)
    }

    #[test]
    fn matches_legendre_supremum() {
        let mut rng = StdRng::seed_from_u64(3);
        for n in 2..=4usize {
            for _ in 0..50 {
                let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.1).collect();
                let mu = Simplex::from_unnormalized(raw).unwrap();
                let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let mean: f64 = t.iter().sum::<f64>() / n as f64;
                for ti in t.iter_mut() {
                    *ti -= mean;
                }
                let theta = ZeroSum::new(t).unwrap();
                let closed = dual_norm_sq(&mu, &theta).unwrap();
                let sup = legendre_sup(&mu, &theta);
                assert!(
                    (closed - sup).abs() < 1e-8,
                    "n={n}: closed {closed} vs sup {sup}"
                );
            }
        }
    }
}
