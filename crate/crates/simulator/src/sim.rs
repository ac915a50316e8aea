//! Euler-Maruyama stepping of the finite-allele SDE.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::{Result, SimError};
use wfld_core::path::Grid;
use wfld_core::rng::stream;
use wfld_core::simplex::SNAP_TOL;
use wfld_core::{FitnessMatrix, ModelParams, PathGrid, SimplexPoint};

/// Discretization controls for [`simulate`].
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
    /// Coordinates are clamped up to this value after every step
    /// (default 0: negatives are clamped to the boundary).
    pub boundary_floor: f64,
    pub seed: u64,
    /// Switch off the noise entirely: the zero-sampling-rate deterministic
    /// limit, integrating only the drift.
    pub zero_noise: bool,
}

impl SimConfig {
    pub fn new(dt: f64, t_end: f64, record_stride: usize, seed: u64) -> Self {
        Self {
            dt,
            t_end,
            record_stride,
            boundary_floor: 0.0,
            seed,
            zero_noise: false,
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= self.t_end) {
            return Err(SimError::InvalidConfig(format!(
                "need 0 < dt <= t_end, got dt = {}, t_end = {}",
                self.dt, self.t_end
            )));
        }
        let steps = self.t_end / self.dt;
        if steps > 1e9 {
            return Err(SimError::InvalidConfig(format!(
                "{steps:.0} steps exceed the 1e9 budget"
            )));
        }
        let rounded = steps.round();
        if (steps - rounded).abs() > 1e-6 * rounded.max(1.0) {
            return Err(SimError::InvalidConfig(format!(
                "t_end / dt = {steps} is not an integer step count"
            )));
        }
        if self.record_stride == 0 {
            return Err(SimError::InvalidConfig("record_stride must be >= 1".into()));
        }
        if rounded as usize % self.record_stride != 0 {
            return Err(SimError::InvalidConfig(format!(
                "record_stride {} does not divide the {} steps",
                self.record_stride, rounded
            )));
        }
        if !(self.boundary_floor >= 0.0 && self.boundary_floor < 0.5) {
            return Err(SimError::InvalidConfig(format!(
                "boundary_floor must be in [0, 0.5), got {}",
                self.boundary_floor
            )));
        }
        Ok(())
    }
}

/// A simulated path on the recording grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: PathGrid,
    /// Filled by the change-of-measure computation when requested.
    pub girsanov_log_weight: Option<f64>,
    pub seed: u64,
    pub config: SimConfig,
}

impl Trajectory {
    pub fn terminal(&self) -> SimplexPoint {
        self.grid.end()
    }

    /// Trajectory CSV export: `t,x_1,...,x_n`, one row per recorded knot,
    /// 17 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> crate::Result<()> {
        self.grid.write_csv(w).map_err(crate::SimError::Core)
    }
}

/// Clamp to the floor, snap sub-resolution mass to exact zero, renormalize.
#[inline]
fn project(state: &mut [f64], floor: f64) {
    let mut sum = 0.0;
    for x in state.iter_mut() {
        if *x < floor {
            *x = floor;
        }
        if *x < SNAP_TOL {
            *x = 0.0;
        }
        sum += *x;
    }
    for x in state.iter_mut() {
        *x /= sum;
    }
}

fn drift_into(
    params: &ModelParams,
    v: Option<&FitnessMatrix>,
    state: &[f64],
    out: &mut [f64],
) {
    let n = state.len();
    let half_theta = 0.5 * params.theta();
    for i in 0..n {
        out[i] = half_theta * (params.p().get(i) - state[i]);
    }
    if let Some(vm) = v {
        let vx = vm.times(state);
        let mean: f64 = state.iter().zip(&vx).map(|(&x, &g)| x * g).sum();
        for i in 0..n {
            out[i] += state[i] * (vx[i] - mean);
        }
    }
}

fn simulate_stream(
    params: &ModelParams,
    v: Option<&FitnessMatrix>,
    cfg: &SimConfig,
    start: &SimplexPoint,
    rng: &mut impl Rng,
    stream_seed: u64,
) -> Result<Trajectory> {
    cfg.validate()?;
    if start.dim() != params.dim() {
        return Err(SimError::Core(wfld_core::CoreError::DimensionMismatch {
            left: start.dim(),
            right: params.dim(),
        }));
    }
    if let Some(vm) = v {
        if vm.dim() != params.dim() {
            return Err(SimError::Core(wfld_core::CoreError::DimensionMismatch {
                left: vm.dim(),
                right: params.dim(),
            }));
        }
    }

    let n = params.dim();
    let m = n - 1;
    let steps = cfg.steps();
    let eps_sqrt_dt = if cfg.zero_noise {
        0.0
    } else {
        params.epsilon() * cfg.dt.sqrt()
    };

    let mut state: Vec<f64> = start.weights().to_vec();
    let mut drift = vec![0.0f64; n];
    let mut noise = vec![0.0f64; m];
    let mut sigma = vec![0.0f64; m * m];

    let records = steps / cfg.record_stride + 1;
    let mut times = Vec::with_capacity(records);
    let mut flat = Vec::with_capacity(records * n);
    times.push(0.0);
    flat.extend_from_slice(&state);

    for step in 1..=steps {
        drift_into(params, v, &state, &mut drift);

        if eps_sqrt_dt > 0.0 {
            crate::cholesky::factor_covariance_into(&state, &mut sigma);
            for item in noise.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *item = z;
            }
            // sigma is lower-triangular: apply in place from the bottom up
            for i in (0..m).rev() {
                let mut acc = 0.0;
                for t in 0..=i {
                    acc += sigma[i * m + t] * noise[t];
                }
                drift[i] = drift[i] * cfg.dt + eps_sqrt_dt * acc;
            }
            drift[m] *= cfg.dt;
        } else {
            for d in drift.iter_mut() {
                *d *= cfg.dt;
            }
        }

        let mut partial = 0.0;
        for i in 0..m {
            state[i] += drift[i];
            partial += state[i];
        }
        // the last coordinate closes the simplex
        state[m] = 1.0 - partial;
        project(&mut state, cfg.boundary_floor);

        for &x in state.iter() {
            if !x.is_finite() {
                return Err(SimError::NonFiniteState { step });
            }
        }

        if step % cfg.record_stride == 0 {
            times.push(step as f64 * cfg.dt);
            flat.extend_from_slice(&state);
        }
    }

    let grid = Grid::from_flat(times, flat, n).map_err(SimError::Core)?;
    Ok(Trajectory {
        grid,
        girsanov_log_weight: None,
        seed: stream_seed,
        config: cfg.clone(),
    })
}

/// One trajectory, deterministic in `(cfg.seed, params, start)`.
pub fn simulate(
    params: &ModelParams,
    v: Option<&FitnessMatrix>,
    cfg: &SimConfig,
    start: &SimplexPoint,
) -> Result<Trajectory> {
    let mut rng = stream(cfg.seed, 0);
    simulate_stream(params, v, cfg, start, &mut rng, cfg.seed)
}

/// Independent trajectories; draw `i` uses the counter-based stream
/// `(cfg.seed, i)`, so the batch is identical for any thread count.
pub fn simulate_batch(
    params: &ModelParams,
    v: Option<&FitnessMatrix>,
    cfg: &SimConfig,
    start: &SimplexPoint,
    count: usize,
) -> Result<Vec<Trajectory>> {
    simulate_fold(params, v, cfg, start, count, |t| t)
}

/// Like [`simulate_batch`], but applies `f` to every trajectory as soon as
/// it is produced, so full grids never accumulate in memory. The output is
/// ordered by trajectory index.
pub fn simulate_fold<T: Send>(
    params: &ModelParams,
    v: Option<&FitnessMatrix>,
    cfg: &SimConfig,
    start: &SimplexPoint,
    count: usize,
    f: impl Fn(Trajectory) -> T + Sync,
) -> Result<Vec<T>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, i);
            simulate_stream(params, v, cfg, start, &mut rng, cfg.seed).map(&f)
        })
        .collect()
}
