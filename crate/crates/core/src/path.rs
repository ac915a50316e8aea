//! Time-discretized simplex-valued paths.

use std::io::{BufRead, Write};

use crate::drift::{mutation_drift, selection_drift};
use crate::error::{CoreError, Result};
use crate::model::{Fitness, Params};
use crate::scalar::Scalar;
use crate::simplex::Simplex;

/// A piecewise-linear path: knot times `0 = t_0 < ... < t_M = T` and one
/// simplex point per knot, stored flat (row-major, `len() * dim()`).
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<S: Scalar> {
    times: Vec<S>,
    knots: Vec<S>,
    n: usize,
}

impl<S: Scalar> Grid<S> {
    pub fn new(times: Vec<S>, knots: Vec<Simplex<S>>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(CoreError::InvalidPath("a path needs at least two knots".into()));
        }
        if times.len() != knots.len() {
            return Err(CoreError::InvalidPath(format!(
                "{} times for {} knots",
                times.len(),
                knots.len()
            )));
        }
        let n = knots[0].dim();
        let mut flat = Vec::with_capacity(knots.len() * n);
        for k in &knots {
            if k.dim() != n {
                return Err(CoreError::DimensionMismatch { left: k.dim(), right: n });
            }
            flat.extend_from_slice(k.weights());
        }
        Self::from_flat(times, flat, n)
    }

    /// Build from pre-validated flat storage. Each row must already be a
    /// valid simplex point; rows are canonicalized.
    pub fn from_flat(times: Vec<S>, flat: Vec<S>, n: usize) -> Result<Self> {
        let m = times.len();
        if m < 2 {
            return Err(CoreError::InvalidPath("a path needs at least two knots".into()));
        }
        if flat.len() != m * n {
            return Err(CoreError::InvalidPath(format!(
                "flat storage holds {} values, expected {}",
                flat.len(),
                m * n
            )));
        }
        if times[0] != S::zero() {
            return Err(CoreError::InvalidPath(format!(
                "path must start at time 0, got {}",
                times[0]
            )));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(CoreError::InvalidPath(
                    "knot times must be strictly increasing".into(),
                ));
            }
        }
        let mut flat = flat;
        for row in 0..m {
            let s = Simplex::new(flat[row * n..(row + 1) * n].to_vec())?;
            flat[row * n..(row + 1) * n].copy_from_slice(s.weights());
        }
        Ok(Self { times, knots: flat, n })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of knots, `M + 1`.
    #[inline]
    pub fn len(&self) -> usize {
        self.times.len()
    }

    #[inline]
    pub fn steps(&self) -> usize {
        self.len() - 1
    }

    #[inline]
    pub fn times(&self) -> &[S] {
        &self.times
    }

    #[inline]
    pub fn horizon(&self) -> S {
        *self.times.last().unwrap()
    }

    #[inline]
    pub fn knot(&self, i: usize) -> &[S] {
        &self.knots[i * self.n..(i + 1) * self.n]
    }

    pub fn knot_point(&self, i: usize) -> Simplex<S> {
        Simplex::new(self.knot(i).to_vec()).expect("stored knots are valid")
    }

    pub fn start(&self) -> Simplex<S> {
        self.knot_point(0)
    }

    pub fn end(&self) -> Simplex<S> {
        self.knot_point(self.len() - 1)
    }

    /// CSV export: header `t,x_1,...,x_n`, one row per knot, 17 significant
    /// digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "t")?;
        for i in 1..=self.n {
            write!(w, ",x_{i}")?;
        }
        writeln!(w)?;
        for row in 0..self.len() {
            write!(w, "{:.16e}", self.times[row])?;
            for &x in self.knot(row) {
                write!(w, ",{x:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

impl Grid<f64> {
    /// Parse the CSV schema produced by [`Grid::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| CoreError::Parse("empty path file".into()))?
            .map_err(CoreError::from)?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() < 3 || cols[0] != "t" {
            return Err(CoreError::Parse(format!(
                "expected header 't,x_1,...,x_n', got '{header}'"
            )));
        }
        for (i, c) in cols[1..].iter().enumerate() {
            let want = format!("x_{}", i + 1);
            if *c != want {
                return Err(CoreError::Parse(format!(
                    "expected column '{want}', got '{c}'"
                )));
            }
        }
        let n = cols.len() - 1;
        let mut times = Vec::new();
        let mut flat = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(CoreError::from)?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n + 1 {
                return Err(CoreError::Parse(format!(
                    "row {}: expected {} fields, got {}",
                    lineno + 2,
                    n + 1,
                    fields.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|e| CoreError::Parse(format!("row {}: {e}", lineno + 2)))
            };
            times.push(parse(fields[0])?);
            for f in &fields[1..] {
                flat.push(parse(f)?);
            }
        }
        Self::from_flat(times, flat, n)
    }
}

/// Uniform time grid `0, T/m, ..., T`.
pub fn uniform_times<S: Scalar>(t_end: S, steps: usize) -> Vec<S> {
    let m = steps.max(1);
    (0..=m)
        .map(|j| t_end * S::of(j as f64) / S::of(m as f64))
        .collect()
}

/// Straight-line interpolation between two points on `[0, T]`.
pub fn linear_path<S: Scalar>(
    a: &Simplex<S>,
    b: &Simplex<S>,
    t_end: S,
    steps: usize,
) -> Result<Grid<S>> {
    crate::simplex::check_dims(a.dim(), b.dim())?;
    let n = a.dim();
    let times = uniform_times(t_end, steps);
    let m = times.len();
    let mut flat = Vec::with_capacity(m * n);
    for (j, _) in times.iter().enumerate() {
        let lam = S::of(j as f64) / S::of(steps as f64);
        for i in 0..n {
            flat.push((S::one() - lam) * a.get(i) + lam * b.get(i));
        }
    }
    Grid::from_flat(times, flat, n)
}

/// Mutation relaxation flow `phi(t) = p + e^{-theta t / 2}(start - p)`,
/// sampled on a uniform grid. This is the exact zero-cost path of the
/// neutral dynamics.
pub fn neutral_flow_path<S: Scalar>(
    params: &Params<S>,
    start: &Simplex<S>,
    t_end: S,
    steps: usize,
) -> Result<Grid<S>> {
    crate::simplex::check_dims(params.dim(), start.dim())?;
    let n = params.dim();
    let times = uniform_times(t_end, steps);
    let mut flat = Vec::with_capacity(times.len() * n);
    for &t in &times {
        let decay = (-params.theta() * t * S::half()).exp();
        for i in 0..n {
            let pi = params.p().get(i);
            flat.push(pi + decay * (start.get(i) - pi));
        }
    }
    Grid::from_flat(times, flat, n)
}

/// Deterministic flow of the full drift `b + r` integrated with classical
/// RK4 on a uniform grid; `r` vanishes when `v` is absent.
pub fn drift_flow_path<S: Scalar>(
    params: &Params<S>,
    v: Option<&Fitness<S>>,
    start: &Simplex<S>,
    t_end: S,
    steps: usize,
) -> Result<Grid<S>> {
    crate::simplex::check_dims(params.dim(), start.dim())?;
    let n = params.dim();
    let times = uniform_times(t_end, steps);
    let dt = t_end / S::of(steps as f64);

    let deriv = |x: &Simplex<S>| -> Result<Vec<S>> {
        let b = mutation_drift(params, x)?;
        let mut dx: Vec<S> = b.components().to_vec();
        if let Some(vm) = v {
            let r = selection_drift(vm, x)?;
            for (d, &ri) in dx.iter_mut().zip(r.components()) {
                *d += ri;
            }
        }
        Ok(dx)
    };

    let advance = |x: &Simplex<S>, delta: &[S], factor: S| -> Result<Simplex<S>> {
        let w: Vec<S> = x
            .weights()
            .iter()
            .zip(delta)
            .map(|(&xi, &di)| (xi + factor * di).max(S::zero()))
            .collect();
        Simplex::from_unnormalized(w)
    };

    let mut flat = Vec::with_capacity(times.len() * n);
    let mut x = start.clone();
    flat.extend_from_slice(x.weights());
    for _ in 0..steps {
        let k1 = deriv(&x)?;
        let k2 = deriv(&advance(&x, &k1, dt * S::half())?)?;
        let k3 = deriv(&advance(&x, &k2, dt * S::half())?)?;
        let k4 = deriv(&advance(&x, &k3, dt)?)?;
        let w: Vec<S> = (0..n)
            .map(|i| {
                let incr = (k1[i] + S::two() * k2[i] + S::two() * k3[i] + k4[i])
                    / S::of(6.0);
                (x.get(i) + dt * incr).max(S::zero())
            })
            .collect();
        x = Simplex::from_unnormalized(w)?;
        flat.extend_from_slice(x.weights());
    }
    Grid::from_flat(times, flat, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(w: &[f64]) -> Simplex<f64> {
        Simplex::new(w.to_vec()).unwrap()
    }

    #[test]
    fn validates_times() {
        let knots = vec![sp(&[0.5, 0.5]), sp(&[0.6, 0.4])];
        assert!(Grid::new(vec![0.0, 1.0], knots.clone()).is_ok());
        assert!(Grid::new(vec![0.5, 1.0], knots.clone()).is_err());
        assert!(Grid::new(vec![0.0, 0.0], knots).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = linear_path(&sp(&[0.5, 0.5]), &sp(&[0.8, 0.2]), 1.0, 7).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let back = Grid::<f64>::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), g.len());
        for i in 0..g.len() {
            assert!((back.times()[i] - g.times()[i]).abs() < 1e-15);
            for j in 0..2 {
                assert!((back.knot(i)[j] - g.knot(i)[j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn csv_rejects_bad_header() {
        let text = "time,x_1,x_2\n0.0,0.5,0.5\n";
        assert!(Grid::<f64>::read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn neutral_flow_matches_rk4() {
        let params = Params::new(1.3, sp(&[0.4, 0.6]), 0.5).unwrap();
        let start = sp(&[0.9, 0.1]);
        let exact = neutral_flow_path(&params, &start, 2.0, 200).unwrap();
        let rk4 = drift_flow_path(&params, None, &start, 2.0, 200).unwrap();
        for i in 0..exact.len() {
            assert!((exact.knot(i)[0] - rk4.knot(i)[0]).abs() < 1e-9);
        }
    }
}
