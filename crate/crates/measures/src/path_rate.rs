//! Path rate functions evaluated through partition projection.

use crate::measure::{project, MeasureOnUnitInterval, Partition};
use crate::{MeasureError, Result};
use wfld_core::action::action_neutral;
use wfld_core::model::Params;
use wfld_core::path::Grid;

/// A measure-valued path sampled at increasing knot times starting at 0.
#[derive(Clone, Debug)]
pub struct MeasurePath {
    times: Vec<f64>,
    measures: Vec<MeasureOnUnitInterval>,
}

impl MeasurePath {
    pub fn new(times: Vec<f64>, measures: Vec<MeasureOnUnitInterval>) -> Result<Self> {
        if times.len() != measures.len() || times.len() < 2 {
            return Err(MeasureError::InvalidPath(
                "need matching times and measures, at least two knots".into(),
            ));
        }
        if times[0] != 0.0 {
            return Err(MeasureError::InvalidPath("path must start at time 0".into()));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(MeasureError::InvalidPath(
                    "knot times must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self { times, measures })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn measures(&self) -> &[MeasureOnUnitInterval] {
        &self.measures
    }
}

/// Neutral path rate of the projected path: project the mutation center and
/// every knot through `part`, then evaluate the finite-allele action with
/// the projected center as `p`.
///
/// `+inf` when the projected path leaves the support region or touches a
/// zero cell inside it. Non-decreasing under partition refinement; the
/// supremum over partitions is approached by refining, never claimed
/// exactly.
pub fn projected_path_rate(
    theta: f64,
    nu0: &MeasureOnUnitInterval,
    path: &MeasurePath,
    part: &Partition,
) -> Result<f64> {
    if part.cells() < 2 {
        // a single cell carries the whole mass at every knot: zero cost
        return Ok(0.0);
    }
    let p = project(nu0, part);
    let params = Params::new(theta, p, 1.0).map_err(MeasureError::Core)?;
    let knots: Vec<_> = path.measures.iter().map(|m| project(m, part)).collect();
    let grid = Grid::new(path.times.clone(), knots).map_err(MeasureError::Core)?;
    action_neutral(&params, &grid).map_err(MeasureError::Core)
}
