//! Model parameters and the pairwise fitness matrix.

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::simplex::{check_dims, Simplex};

/// Parent-independent mutation parameters plus the sampling rate.
///
/// `epsilon` is always derived as `sqrt(gamma)`; it is never stored, so the
/// relation `epsilon^2 = gamma` cannot drift.
#[derive(Clone, Debug)]
pub struct Params<S: Scalar> {
    theta: S,
    p: Simplex<S>,
    gamma: S,
}

impl<S: Scalar> Params<S> {
    pub fn new(theta: S, p: Simplex<S>, gamma: S) -> Result<Self> {
        if !(theta.is_finite() && theta > S::zero()) {
            return Err(CoreError::InvalidParams(format!(
                "theta must be positive, got {theta}"
            )));
        }
        if !(gamma.is_finite() && gamma > S::zero()) {
            return Err(CoreError::InvalidParams(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if p.dim() < 2 {
            return Err(CoreError::InvalidParams(
                "the model needs at least two types".into(),
            ));
        }
        Ok(Self { theta, p, gamma })
    }

    #[inline]
    pub fn theta(&self) -> S {
        self.theta
    }

    #[inline]
    pub fn p(&self) -> &Simplex<S> {
        &self.p
    }

    #[inline]
    pub fn gamma(&self) -> S {
        self.gamma
    }

    /// Noise amplitude of the diffusion, `sqrt(gamma)`.
    #[inline]
    pub fn epsilon(&self) -> S {
        self.gamma.sqrt()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.p.dim()
    }

    /// Same mutation structure with a different sampling rate.
    pub fn with_gamma(&self, gamma: S) -> Result<Self> {
        Self::new(self.theta, self.p.clone(), gamma)
    }
}

/// Symmetric `n x n` fitness matrix, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Fitness<S: Scalar> {
    n: usize,
    entries: Vec<S>,
}

impl<S: Scalar> Fitness<S> {
    pub fn new(n: usize, entries: Vec<S>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(CoreError::InvalidParams(format!(
                "fitness matrix needs {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        for (k, x) in entries.iter().enumerate() {
            if !x.is_finite() {
                return Err(CoreError::InvalidParams(format!(
                    "non-finite fitness entry at flat index {k}"
                )));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if entries[i * n + j] != entries[j * n + i] {
                    return Err(CoreError::InvalidParams(format!(
                        "fitness matrix must be symmetric as stored: V[{i}][{j}] != V[{j}][{i}]"
                    )));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            check_dims(row.len(), n)?;
            entries.extend_from_slice(row);
        }
        Self::new(n, entries)
    }

    pub fn constant(n: usize, c: S) -> Self {
        Self {
            n,
            entries: vec![c; n * n],
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::constant(n, S::zero())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.entries[i * self.n + j]
    }

    /// Matrix-vector product `V x`.
    pub fn times(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let row = &self.entries[i * self.n..(i + 1) * self.n];
                row.iter().zip(x).map(|(&v, &xi)| v * xi).sum()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_is_derived() {
        let p = Simplex::<f64>::uniform(2);
        let params = Params::new(1.0, p, 0.25).unwrap();
        assert_eq!(params.epsilon(), 0.5);
        assert_eq!(params.epsilon() * params.epsilon(), params.gamma());
    }

    #[test]
    fn rejects_nonpositive_rates() {
        let p = Simplex::<f64>::uniform(2);
        assert!(Params::new(0.0, p.clone(), 0.5).is_err());
        assert!(Params::new(1.0, p, 0.0).is_err());
    }

    #[test]
    fn fitness_must_be_symmetric() {
        assert!(Fitness::from_rows(&[vec![1.0, 0.5], vec![0.5, 2.0]]).is_ok());
        assert!(Fitness::from_rows(&[vec![1.0, 0.5], vec![0.4, 2.0]]).is_err());
    }

    #[test]
    fn times_multiplies() {
        let v = Fitness::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(v.times(&[0.5, 0.5]), vec![0.5, 0.0]);
    }
}
