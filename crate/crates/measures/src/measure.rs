//! Measures on the unit interval and finite interval partitions.

use crate::{MeasureError, Result};
use wfld_core::SimplexPoint;

const MASS_TOL: f64 = 1e-12;

/// A probability measure on `[0, 1]`: finitely many atoms plus a
/// piecewise-constant density. Closed under partition projection, with
/// exact projections and exact relative entropies.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureOnUnitInterval {
    /// `(location, mass)`, sorted by location, masses positive.
    atoms: Vec<(f64, f64)>,
    /// `(left, right, height)`, sorted, non-overlapping, heights
    /// non-negative (mass per unit length).
    pieces: Vec<(f64, f64, f64)>,
}

impl MeasureOnUnitInterval {
    pub fn new(mut atoms: Vec<(f64, f64)>, mut pieces: Vec<(f64, f64, f64)>) -> Result<Self> {
        for &(loc, mass) in &atoms {
            if !(0.0..=1.0).contains(&loc) || !loc.is_finite() {
                return Err(MeasureError::InvalidMeasure(format!(
                    "atom location {loc} outside [0, 1]"
                )));
            }
            if !(mass.is_finite() && mass > 0.0) {
                return Err(MeasureError::InvalidMeasure(format!(
                    "atom mass {mass} must be positive"
                )));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in atoms.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(MeasureError::InvalidMeasure(format!(
                    "duplicate atom location {}",
                    w[0].0
                )));
            }
        }
        pieces.retain(|&(_, _, h)| h != 0.0);
        for &(l, r, h) in &pieces {
            if !(l.is_finite() && r.is_finite() && h.is_finite()) || l < 0.0 || r > 1.0 || l >= r {
                return Err(MeasureError::InvalidMeasure(format!(
                    "bad density piece [{l}, {r}] x {h}"
                )));
            }
            if h < 0.0 {
                return Err(MeasureError::InvalidMeasure(format!(
                    "negative density height {h}"
                )));
            }
        }
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pieces.windows(2) {
            if w[0].1 > w[1].0 {
                return Err(MeasureError::InvalidMeasure(format!(
                    "overlapping density pieces at {}",
                    w[1].0
                )));
            }
        }
        let total: f64 = atoms.iter().map(|&(_, m)| m).sum::<f64>()
            + pieces.iter().map(|&(l, r, h)| (r - l) * h).sum::<f64>();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(MeasureError::InvalidMeasure(format!(
                "total mass {total}, expected 1 within {MASS_TOL:e}"
            )));
        }
        Ok(Self { atoms, pieces })
    }

    /// Lebesgue measure on `[0, 1]`.
    pub fn lebesgue() -> Self {
        Self {
            atoms: vec![],
            pieces: vec![(0.0, 1.0, 1.0)],
        }
    }

    /// Point mass.
    pub fn atom(loc: f64) -> Result<Self> {
        Self::new(vec![(loc, 1.0)], vec![])
    }

    /// Piecewise-constant density from `(left, right, height)` triples.
    pub fn from_density(pieces: Vec<(f64, f64, f64)>) -> Result<Self> {
        Self::new(vec![], pieces)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[(f64, f64, f64)] {
        &self.pieces
    }

    /// Density height at a point (ignores atoms).
    fn height_at(&self, z: f64) -> f64 {
        for &(l, r, h) in &self.pieces {
            if z >= l && z < r {
                return h;
            }
        }
        0.0
    }

    /// Mass of `(lo, hi]`, or `[lo, hi]` when `include_lo` (first cell).
    pub fn interval_mass(&self, lo: f64, hi: f64, include_lo: bool) -> f64 {
        let mut mass = 0.0;
        for &(loc, m) in &self.atoms {
            let inside = if include_lo {
                loc >= lo && loc <= hi
            } else {
                loc > lo && loc <= hi
            };
            if inside {
                mass += m;
            }
        }
        for &(l, r, h) in &self.pieces {
            let a = l.max(lo);
            let b = r.min(hi);
            if b > a {
                mass += (b - a) * h;
            }
        }
        mass
    }

    /// Atom locations in the open interval; genuinely singular structure
    /// that dyadic refinement can never resolve on its own.
    pub fn atom_breakpoints(&self) -> Vec<f64> {
        self.atoms
            .iter()
            .map(|&(loc, _)| loc)
            .filter(|&z| z > 0.0 && z < 1.0)
            .collect()
    }

    /// All representation breakpoints in `(0, 1)`: atoms and piece edges.
    pub fn structural_breakpoints(&self) -> Vec<f64> {
        let mut out = self.atom_breakpoints();
        for &(l, r, _) in &self.pieces {
            for z in [l, r] {
                if z > 0.0 && z < 1.0 {
                    out.push(z);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Exact relative entropy `H(self | other)` for the representable pair:
    /// atoms against atoms, densities against densities on the joint mesh;
    /// `+inf` when `self` is not absolutely continuous with respect to
    /// `other`.
    pub fn relative_entropy_to(&self, other: &Self) -> f64 {
        let mut h = 0.0;
        for &(loc, m) in &self.atoms {
            match other.atoms.iter().find(|&&(l, _)| l == loc) {
                Some(&(_, m2)) => h += m * (m / m2).ln(),
                None => return f64::INFINITY,
            }
        }
        // joint density mesh
        let mut edges: Vec<f64> = vec![0.0, 1.0];
        for &(l, r, _) in self.pieces.iter().chain(&other.pieces) {
            edges.push(l);
            edges.push(r);
        }
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let f = self.height_at(mid);
            if f == 0.0 {
                continue;
            }
            let g = other.height_at(mid);
            if g == 0.0 {
                return f64::INFINITY;
            }
            h += (b - a) * f * (f / g).ln();
        }
        h
    }
}

/// A finite interval partition of `[0, 1]`: breakpoints
/// `0 < t_1 < ... < t_k < 1` defining the cells
/// `[0, t_1], (t_1, t_2], ..., (t_k, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    breakpoints: Vec<f64>,
}

impl Partition {
    pub fn new(mut breakpoints: Vec<f64>) -> Result<Self> {
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        for &t in &breakpoints {
            if !(t > 0.0 && t < 1.0) {
                return Err(MeasureError::InvalidPartition(format!(
                    "breakpoint {t} outside (0, 1)"
                )));
            }
        }
        Ok(Self { breakpoints })
    }

    /// The trivial partition (single cell).
    pub fn trivial() -> Self {
        Self {
            breakpoints: vec![],
        }
    }

    /// Dyadic partition at level `k`.
    pub fn dyadic(level: u32) -> Self {
        let m = 1u64 << level;
        Self {
            breakpoints: (1..m).map(|j| j as f64 / m as f64).collect(),
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn cells(&self) -> usize {
        self.breakpoints.len() + 1
    }

    /// Cell bounds as `(lo, hi, include_lo)`.
    pub fn cell_bounds(&self, idx: usize) -> (f64, f64, bool) {
        let lo = if idx == 0 {
            0.0
        } else {
            self.breakpoints[idx - 1]
        };
        let hi = if idx == self.breakpoints.len() {
            1.0
        } else {
            self.breakpoints[idx]
        };
        (lo, hi, idx == 0)
    }

    /// Common refinement: the union of breakpoints.
    pub fn refine(&self, other: &Self) -> Self {
        let mut b = self.breakpoints.clone();
        b.extend_from_slice(&other.breakpoints);
        b.sort_by(f64::total_cmp);
        b.dedup();
        Self { breakpoints: b }
    }

    /// True when every cell of `self` is a union of cells of `finer`.
    pub fn is_refined_by(&self, finer: &Self) -> bool {
        self.breakpoints
            .iter()
            .all(|t| finer.breakpoints.contains(t))
    }
}

/// Cell masses of a measure under a partition.
pub fn project(measure: &MeasureOnUnitInterval, part: &Partition) -> SimplexPoint {
    let k = part.cells();
    let mut masses = Vec::with_capacity(k);
    for idx in 0..k {
        let (lo, hi, include_lo) = part.cell_bounds(idx);
        masses.push(measure.interval_mass(lo, hi, include_lo));
    }
    SimplexPoint::from_unnormalized(masses).expect("cell masses of a probability measure")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_mass() {
        assert!(MeasureOnUnitInterval::new(vec![(0.3, 0.5)], vec![(0.0, 1.0, 0.5)]).is_ok());
        assert!(MeasureOnUnitInterval::new(vec![(0.3, 0.5)], vec![(0.0, 1.0, 0.6)]).is_err());
        assert!(MeasureOnUnitInterval::new(vec![(1.3, 1.0)], vec![]).is_err());
        assert!(MeasureOnUnitInterval::new(
            vec![],
            vec![(0.0, 0.6, 1.0), (0.5, 1.0, 0.8)]
        )
        .is_err());
    }

    #[test]
    fn projection_examples() {
        let lebesgue = MeasureOnUnitInterval::lebesgue();
        let trivial = project(&lebesgue, &Partition::trivial());
        assert_eq!(trivial.weights(), &[1.0]);

        let part = Partition::new(vec![0.25, 0.5]).unwrap();
        let proj = project(&lebesgue, &part);
        assert_eq!(proj.weights(), &[0.25, 0.25, 0.5]);

        let atom = MeasureOnUnitInterval::atom(0.3).unwrap();
        let proj = project(&atom, &Partition::new(vec![0.5]).unwrap());
        assert_eq!(proj.weights(), &[1.0, 0.0]);

        // atom exactly on a breakpoint belongs to the left cell
        let atom_half = MeasureOnUnitInterval::atom(0.5).unwrap();
        let proj = project(&atom_half, &Partition::new(vec![0.5]).unwrap());
        assert_eq!(proj.weights(), &[1.0, 0.0]);
    }

    #[test]
    fn refine_is_breakpoint_union() {
        let a = Partition::new(vec![0.5]).unwrap();
        let b = Partition::new(vec![0.25]).unwrap();
        assert_eq!(a.refine(&a), a);
        let ab = a.refine(&b);
        assert_eq!(ab.breakpoints(), &[0.25, 0.5]);
        assert!(a.is_refined_by(&ab));
        assert!(b.is_refined_by(&ab));
    }

    #[test]
    fn projection_is_compatible_with_refinement() {
        // aggregating the fine projection over coarse cells reproduces the
        // coarse projection
        let mu = MeasureOnUnitInterval::new(
            vec![(0.3, 0.2), (0.9, 0.1)],
            vec![(0.0, 0.5, 0.8), (0.5, 1.0, 0.6)],
        )
        .unwrap();
        let a = Partition::new(vec![0.4, 0.7]).unwrap();
        let b = Partition::new(vec![0.2, 0.4, 0.85]).unwrap();
        let fine = a.refine(&b);
        let pa = project(&mu, &a);
        let pf = project(&mu, &fine);

        // map each fine cell to its coarse cell by its right endpoint
        let mut agg = vec![0.0; pa.dim()];
        for idx in 0..fine.cells() {
            let (_, hi, _) = fine.cell_bounds(idx);
            let coarse_idx = a
                .breakpoints()
                .iter()
                .position(|&t| hi <= t)
                .unwrap_or(a.breakpoints().len());
            agg[coarse_idx] += pf.get(idx);
        }
        for i in 0..pa.dim() {
            assert!((agg[i] - pa.get(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_preserves_mass() {
        let mu = MeasureOnUnitInterval::new(
            vec![(0.11, 0.35)],
            vec![(0.0, 0.25, 1.0), (0.25, 1.0, 8.0 / 15.0)],
        )
        .unwrap();
        for part in [
            Partition::trivial(),
            Partition::dyadic(3),
            Partition::new(vec![0.11, 0.77]).unwrap(),
        ] {
            let proj = project(&mu, &part);
            let sum: f64 = proj.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_entropy() {
        let lebesgue = MeasureOnUnitInterval::lebesgue();
        assert_eq!(lebesgue.relative_entropy_to(&lebesgue), 0.0);

        // two-piece density against Lebesgue: sum L h ln h
        let mu =
            MeasureOnUnitInterval::from_density(vec![(0.0, 0.5, 1.6), (0.5, 1.0, 0.4)]).unwrap();
        let want = 0.5 * 1.6 * 1.6f64.ln() + 0.5 * 0.4 * 0.4f64.ln();
        let got = mu.relative_entropy_to(&lebesgue);
        assert!((got - want).abs() < 1e-14);

        // atom against Lebesgue is not absolutely continuous
        let atom = MeasureOnUnitInterval::atom(0.3).unwrap();
        assert!(atom.relative_entropy_to(&lebesgue).is_infinite());
        // but Lebesgue against atom is infinite too (density vs pure atom)
        assert!(lebesgue.relative_entropy_to(&atom).is_infinite());

        // matching atoms are fine
        let nu = MeasureOnUnitInterval::new(vec![(0.3, 0.5)], vec![(0.0, 1.0, 0.5)]).unwrap();
        let mu2 = MeasureOnUnitInterval::new(vec![(0.3, 0.25)], vec![(0.0, 1.0, 0.75)]).unwrap();
        let h = mu2.relative_entropy_to(&nu);
        let want = 0.25 * (0.25f64 / 0.5).ln() + 0.75 * (0.75f64 / 0.5).ln();
        assert!((h - want).abs() < 1e-14);
    }
}
