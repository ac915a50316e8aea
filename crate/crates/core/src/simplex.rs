//! Probability vectors and zero-sum tangent vectors.

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// Stored weights must sum to one within this absolute tolerance (the
/// `f64` value; `f32` uses the analogous single-precision tolerance).
pub const SUM_TOL: f64 = 1e-12;

/// Weights below this are snapped to exact zero at construction.
///
/// The rate functions are discontinuous at the support boundary, so support
/// membership is decided by exact comparison against stored zeros; the snap
/// makes that decision reproducible.
pub const SNAP_TOL: f64 = 1e-15;

/// A probability vector: non-negative weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Simplex<S: Scalar> {
    weights: Vec<S>,
}

impl<S: Scalar> Simplex<S> {
    /// Validate and canonicalize: weights below `SNAP_TOL` become exact
    /// zeros and the vector is renormalized to kill sum drift.
    pub fn new(weights: Vec<S>) -> Result<Self> {
        if weights.is_empty() {
            return Err(CoreError::InvalidSimplex("empty weight vector".into()));
        }
        let mut w = weights;
        for (i, x) in w.iter_mut().enumerate() {
            if !x.is_finite() {
                return Err(CoreError::InvalidSimplex(format!(
                    "non-finite weight at index {i}"
                )));
            }
            if *x < -S::sum_tol() {
                return Err(CoreError::InvalidSimplex(format!(
                    "negative weight {} at index {i}",
                    *x
                )));
            }
            if *x < S::snap_tol() {
                *x = S::zero();
            }
        }
        let sum: S = w.iter().copied().sum();
        if (sum - S::one()).abs() > S::sum_tol() {
            return Err(CoreError::InvalidSimplex(format!(
                "weights sum to {sum}, expected 1 within {:e}",
                S::sum_tol()
            )));
        }
        for x in w.iter_mut() {
            *x /= sum;
        }
        Ok(Self { weights: w })
    }

    /// Scale an arbitrary non-negative vector onto the simplex.
    pub fn from_unnormalized(raw: Vec<S>) -> Result<Self> {
        let sum: S = raw.iter().copied().sum();
        if !sum.is_finite() || sum <= S::zero() {
            return Err(CoreError::InvalidSimplex(format!(
                "cannot normalize vector with total mass {sum}"
            )));
        }
        Self::new(raw.into_iter().map(|x| x / sum).collect())
    }

    pub fn uniform(n: usize) -> Self {
        let w = S::one() / S::of(n as f64);
        Self {
            weights: vec![w; n],
        }
    }

    /// Point mass on coordinate `i`.
    pub fn delta(n: usize, i: usize) -> Self {
        let mut w = vec![S::zero(); n];
        w[i] = S::one();
        Self { weights: w }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    #[inline]
    pub fn get(&self, i: usize) -> S {
        self.weights[i]
    }

    /// Indices with strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.weights[i] > S::zero()).collect()
    }

    /// Absolute continuity `self << p`: every stored zero of `p` is a stored
    /// zero of `self`. Exact comparison on canonicalized weights.
    pub fn abs_continuous_wrt(&self, p: &Self) -> Result<bool> {
        check_dims(self.dim(), p.dim())?;
        Ok(self
            .weights
            .iter()
            .zip(p.weights.iter())
            .all(|(&x, &pi)| pi > S::zero() || x == S::zero()))
    }

    /// Strictly positive on the support of `p`.
    pub fn positive_on_support_of(&self, p: &Self) -> Result<bool> {
        check_dims(self.dim(), p.dim())?;
        Ok(self
            .weights
            .iter()
            .zip(p.weights.iter())
            .all(|(&x, &pi)| pi == S::zero() || x > S::zero()))
    }

    pub fn is_interior(&self) -> bool {
        self.weights.iter().all(|&x| x > S::zero())
    }

    /// Sup-norm distance to another point of the same dimension.
    pub fn sup_distance(&self, other: &Self) -> Result<S> {
        check_dims(self.dim(), other.dim())?;
        Ok(self
            .weights
            .iter()
            .zip(other.weights.iter())
            .map(|(&a, &b)| (a - b).abs())
            .fold(S::zero(), S::max))
    }
}

/// A tangent direction to the simplex: components summing to zero.
///
/// Construction subtracts the component mean, so the stored vector is
/// exactly zero-sum and drift formulas cannot accumulate off-simplex error.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSum<S: Scalar> {
    components: Vec<S>,
}

impl<S: Scalar> ZeroSum<S> {
    pub fn new(components: Vec<S>) -> Result<Self> {
        if components.is_empty() {
            return Err(CoreError::InvalidParams("empty zero-sum vector".into()));
        }
        for (i, x) in components.iter().enumerate() {
            if !x.is_finite() {
                return Err(CoreError::InvalidParams(format!(
                    "non-finite component at index {i}"
                )));
            }
        }
        let sum: S = components.iter().copied().sum();
        if sum.abs() > S::sum_tol() {
            return Err(CoreError::InvalidParams(format!(
                "components sum to {sum}, expected 0 within {:e}",
                S::sum_tol()
            )));
        }
        let mean = sum / S::of(components.len() as f64);
        let c = components.into_iter().map(|x| x - mean).collect();
        Ok(Self { components: c })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    #[inline]
    pub fn components(&self) -> &[S] {
        &self.components
    }

    #[inline]
    pub fn get(&self, i: usize) -> S {
        self.components[i]
    }
}

#[inline]
pub(crate) fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(CoreError::DimensionMismatch { left, right });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_valid_point_and_canonicalizes() {
        let x = Simplex::<f64>::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(x.weights(), &[0.5, 0.5]);

        // tiny weight snaps to exact zero
        let y = Simplex::<f64>::new(vec![1.0 - 1e-16, 1e-16]).unwrap();
        assert_eq!(y.get(1), 0.0);
        assert_eq!(y.get(0), 1.0);
    }

    #[test]
    fn rejects_bad_points() {
        assert!(Simplex::<f64>::new(vec![]).is_err());
        assert!(Simplex::<f64>::new(vec![0.6, 0.6]).is_err());
        assert!(Simplex::<f64>::new(vec![1.2, -0.2]).is_err());
        assert!(Simplex::<f64>::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn support_and_abs_continuity() {
        let p = Simplex::<f64>::new(vec![0.5, 0.5, 0.0]).unwrap();
        let x = Simplex::<f64>::new(vec![0.2, 0.8, 0.0]).unwrap();
        let y = Simplex::<f64>::new(vec![0.4, 0.4, 0.2]).unwrap();
        assert_eq!(p.support(), vec![0, 1]);
        assert!(x.abs_continuous_wrt(&p).unwrap());
        assert!(!y.abs_continuous_wrt(&p).unwrap());
        assert!(x.positive_on_support_of(&p).unwrap());
    }

    #[test]
    fn zero_sum_subtracts_mean() {
        let v = ZeroSum::<f64>::new(vec![0.3, -0.3 + 1e-14]).unwrap();
        let s: f64 = v.components().iter().sum();
        assert_eq!(s, 0.0);
        assert!(ZeroSum::<f64>::new(vec![0.3, 0.3]).is_err());
    }

    #[test]
    fn dimension_mismatch_detected() {
        let a = Simplex::<f64>::uniform(2);
        let b = Simplex::<f64>::uniform(3);
        assert!(matches!(
            a.abs_continuous_wrt(&b),
            Err(CoreError::DimensionMismatch { .. })
        ));
    }
}
