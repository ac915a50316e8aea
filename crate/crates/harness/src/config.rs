//! Declarative experiment configs.
//!
//! The on-disk format is TOML with typed blocks; unknown keys are errors,
//! not warnings, so config drift cannot pass silently. Validation reports
//! the offending field by its dotted path.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::{HarnessError, Result};
use wfld_core::simplex::Simplex;
use wfld_core::{FitnessMatrix, ModelParams, PathGrid};
use wfld_equilibrium::EventBox;
use wfld_measures::MeasureOnUnitInterval;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    EquilibriumScan,
    Simulate,
    GirsanovCheck,
    Action,
    MinimizeAction,
    QuasiPotential,
    PartitionEntropy,
    TubeProb,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "equilibrium-scan" => Self::EquilibriumScan,
            "simulate" => Self::Simulate,
            "girsanov-check" => Self::GirsanovCheck,
            "action" => Self::Action,
            "minimize" | "minimize-action" => Self::MinimizeAction,
            "quasipotential" => Self::QuasiPotential,
            "partition-entropy" => Self::PartitionEntropy,
            "tube-prob" | "path-tube" => Self::TubeProb,
            other => {
                return Err(HarnessError::Config(format!(
                    "kind: unknown experiment kind '{other}'"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::EquilibriumScan => "equilibrium-scan",
            Self::Simulate => "simulate",
            Self::GirsanovCheck => "girsanov-check",
            Self::Action => "action",
            Self::MinimizeAction => "minimize-action",
            Self::QuasiPotential => "quasipotential",
            Self::PartitionEntropy => "partition-entropy",
            Self::TubeProb => "tube-prob",
        }
    }
}

// ---------------------------------------------------------------------------
// raw TOML layer
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: String,
    model: Option<RawModel>,
    fitness: Option<RawFitness>,
    sim: Option<RawSim>,
    event: Option<RawEvent>,
    scan: Option<RawScan>,
    minimize: Option<RawMinimize>,
    partition: Option<RawPartition>,
    action: Option<RawAction>,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    n: Option<usize>,
    theta: f64,
    p: Vec<f64>,
    gamma: Option<f64>,
    gammas: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFitness {
    matrix: Option<Vec<Vec<f64>>>,
    file: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    dt: f64,
    t_end: f64,
    trajectories: Option<usize>,
    record_stride: Option<usize>,
    seed: Option<u64>,
    boundary_floor: Option<f64>,
    zero_noise: Option<bool>,
    start: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    box_lo: Option<Vec<f64>>,
    box_hi: Option<Vec<f64>>,
    center_path: Option<String>,
    delta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScan {
    mode: String,
    samples: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMinimize {
    start: Option<Vec<f64>>,
    end: Vec<f64>,
    horizon: Option<f64>,
    horizons: Option<Vec<f64>>,
    knots: usize,
    max_iters: Option<usize>,
    grad_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPartition {
    max_level: u32,
    mu: RawMeasure,
    nu: RawMeasure,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    atoms: Option<Vec<[f64; 2]>>,
    density: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAction {
    path: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    formats: Option<Vec<String>>,
}

// ---------------------------------------------------------------------------
// validated layer
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ModelBlock {
    pub theta: f64,
    pub p: Simplex<f64>,
    /// Single rate or a strictly decreasing sweep list.
    pub gammas: Vec<f64>,
}

impl ModelBlock {
    pub fn params_at(&self, gamma: f64) -> Result<ModelParams> {
        ModelParams::new(self.theta, self.p.clone(), gamma)
            .map_err(|e| HarnessError::Config(format!("model: {e}")))
    }

    pub fn single_gamma(&self) -> Result<f64> {
        if self.gammas.len() != 1 {
            return Err(HarnessError::Config(
                "model.gamma: this experiment kind needs a single gamma".into(),
            ));
        }
        Ok(self.gammas[0])
    }
}

#[derive(Clone, Debug)]
pub struct SimBlock {
    pub dt: f64,
    pub t_end: f64,
    pub trajectories: usize,
    pub record_stride: usize,
    pub seed: u64,
    pub boundary_floor: f64,
    pub zero_noise: bool,
    pub start: Option<Simplex<f64>>,
}

#[derive(Clone, Debug)]
pub struct MinimizeBlock {
    pub start: Option<Simplex<f64>>,
    pub end: Simplex<f64>,
    pub horizons: Vec<f64>,
    pub knots: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
}

#[derive(Clone, Debug)]
pub struct ScanBlock {
    pub mode: wfld_equilibrium::ScanMode,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct PartitionBlock {
    pub max_level: u32,
    pub mu: MeasureOnUnitInterval,
    pub nu: MeasureOnUnitInterval,
}

#[derive(Clone, Debug)]
pub enum EventBlock {
    Box(EventBox),
    Tube { center: PathGrid, delta: f64 },
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub model: Option<ModelBlock>,
    pub fitness: Option<FitnessMatrix>,
    pub sim: Option<SimBlock>,
    pub event: Option<EventBlock>,
    pub scan: Option<ScanBlock>,
    pub minimize: Option<MinimizeBlock>,
    pub partition: Option<PartitionBlock>,
    pub action_path: Option<PathGrid>,
    pub out_dir: PathBuf,
    pub formats: Vec<String>,
    /// Verbatim text of the loaded file, echoed into the JSON summary.
    pub raw_text: String,
}

fn cfg_err(field: &str, msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("{field}: {msg}"))
}

fn simplex_field(field: &str, w: &[f64]) -> Result<Simplex<f64>> {
    Simplex::new(w.to_vec()).map_err(|e| cfg_err(field, e))
}

fn measure_field(field: &str, raw: &RawMeasure) -> Result<MeasureOnUnitInterval> {
    let atoms = raw
        .atoms
        .clone()
        .unwrap_or_default()
        .into_iter()
        .map(|[loc, mass]| (loc, mass))
        .collect();
    let pieces = raw
        .density
        .clone()
        .unwrap_or_default()
        .into_iter()
        .map(|[l, r, h]| (l, r, h))
        .collect();
    MeasureOnUnitInterval::new(atoms, pieces).map_err(|e| cfg_err(field, e))
}

impl ExperimentConfig {
    /// Parse and validate a config file. Referenced files (fitness matrix,
    /// path CSVs) are loaded here, so a missing file is a load-time error.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_str_with_base(&text, base)
    }

    /// Parse from a string; relative file references resolve against `base`.
    pub fn from_str_with_base(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        let kind = ExperimentKind::parse(&raw.kind)?;

        let model = raw.model.as_ref().map(|m| -> Result<ModelBlock> {
            if let Some(n) = m.n {
                if n != m.p.len() {
                    return Err(cfg_err(
                        "model.n",
                        format!("n = {n} but model.p has {} entries", m.p.len()),
                    ));
                }
            }
            let p = simplex_field("model.p", &m.p)?;
            let gammas = match (&m.gamma, &m.gammas) {
                (Some(_), Some(_)) => {
                    return Err(cfg_err("model.gamma", "give either gamma or gammas, not both"))
                }
                (Some(g), None) => vec![*g],
                (None, Some(gs)) => gs.clone(),
                (None, None) => {
                    return Err(cfg_err("model.gamma", "one of gamma or gammas is required"))
                }
            };
            if gammas.is_empty() {
                return Err(cfg_err("model.gammas", "empty list"));
            }
            for &g in &gammas {
                if !(g.is_finite() && g > 0.0) {
                    return Err(cfg_err("model.gammas", format!("non-positive rate {g}")));
                }
            }
            if !(m.theta.is_finite() && m.theta > 0.0) {
                return Err(cfg_err("model.theta", format!("must be positive, got {}", m.theta)));
            }
            Ok(ModelBlock {
                theta: m.theta,
                p,
                gammas,
            })
        });
        let model = model.transpose()?;

        let fitness = match &raw.fitness {
            None => None,
            Some(f) => Some(Self::load_fitness(f, base, model.as_ref())?),
        };

        let sim = raw
            .sim
            .as_ref()
            .map(|s| -> Result<SimBlock> {
                let start = match &s.start {
                    None => None,
                    Some(w) => Some(simplex_field("sim.start", w)?),
                };
                Ok(SimBlock {
                    dt: s.dt,
                    t_end: s.t_end,
                    trajectories: s.trajectories.unwrap_or(1),
                    record_stride: s.record_stride.unwrap_or(1),
                    seed: s.seed.unwrap_or(0),
                    boundary_floor: s.boundary_floor.unwrap_or(0.0),
                    zero_noise: s.zero_noise.unwrap_or(false),
                    start,
                })
            })
            .transpose()?;

        let event = raw
            .event
            .as_ref()
            .map(|e| -> Result<EventBlock> {
                match (&e.box_lo, &e.box_hi, &e.center_path, &e.delta) {
                    (Some(lo), Some(hi), None, None) => Ok(EventBlock::Box(
                        EventBox::new(lo.clone(), hi.clone())
                            .map_err(|err| cfg_err("event.box_lo/box_hi", err))?,
                    )),
                    (None, None, Some(file), Some(delta)) => {
                        let delta = *delta;
                        if !(delta > 0.0) {
                            return Err(cfg_err("event.delta", "must be positive"));
                        }
                        let full = base.join(file);
                        let reader = std::fs::File::open(&full).map_err(|err| {
                            cfg_err("event.center_path", format!("{}: {err}", full.display()))
                        })?;
                        let center = PathGrid::read_csv(std::io::BufReader::new(reader))
                            .map_err(|err| cfg_err("event.center_path", err))?;
                        Ok(EventBlock::Tube { center, delta })
                    }
                    _ => Err(cfg_err(
                        "event",
                        "give either box_lo/box_hi or center_path/delta",
                    )),
                }
            })
            .transpose()?;

        let scan = raw
            .scan
            .as_ref()
            .map(|s| -> Result<ScanBlock> {
                let mode = match s.mode.as_str() {
                    "exact" => wfld_equilibrium::ScanMode::Exact,
                    "monte-carlo" => wfld_equilibrium::ScanMode::MonteCarlo,
                    other => return Err(cfg_err("scan.mode", format!("unknown mode '{other}'"))),
                };
                if mode == wfld_equilibrium::ScanMode::MonteCarlo && s.samples.is_none() {
                    return Err(cfg_err("scan.samples", "required in monte-carlo mode"));
                }
                Ok(ScanBlock {
                    mode,
                    samples: s.samples.unwrap_or(0),
                    seed: s.seed.unwrap_or(0),
                })
            })
            .transpose()?;

        let minimize = raw
            .minimize
            .as_ref()
            .map(|m| -> Result<MinimizeBlock> {
                let start = match &m.start {
                    None => None,
                    Some(w) => Some(simplex_field("minimize.start", w)?),
                };
                let end = simplex_field("minimize.end", &m.end)?;
                let horizons = match (&m.horizon, &m.horizons) {
                    (Some(t), None) => vec![*t],
                    (None, Some(ts)) => ts.clone(),
                    (None, None) => wfld_core::minimize::default_horizons(),
                    (Some(_), Some(_)) => {
                        return Err(cfg_err(
                            "minimize.horizon",
                            "give either horizon or horizons, not both",
                        ))
                    }
                };
                Ok(MinimizeBlock {
                    start,
                    end,
                    horizons,
                    knots: m.knots,
                    max_iters: m.max_iters.unwrap_or(50_000),
                    grad_tol: m.grad_tol.unwrap_or(1e-8),
                })
            })
            .transpose()?;

        let partition = raw
            .partition
            .as_ref()
            .map(|p| -> Result<PartitionBlock> {
                Ok(PartitionBlock {
                    max_level: p.max_level,
                    mu: measure_field("partition.mu", &p.mu)?,
                    nu: measure_field("partition.nu", &p.nu)?,
                })
            })
            .transpose()?;

        let action_path = raw
            .action
            .as_ref()
            .map(|a| -> Result<PathGrid> {
                let full = base.join(&a.path);
                let reader = std::fs::File::open(&full)
                    .map_err(|e| cfg_err("action.path", format!("{}: {e}", full.display())))?;
                PathGrid::read_csv(std::io::BufReader::new(reader))
                    .map_err(|e| cfg_err("action.path", e))
            })
            .transpose()?;

        let out_dir = raw
            .output
            .as_ref()
            .and_then(|o| o.dir.clone())
            .unwrap_or_else(|| "out".into());
        let formats = raw
            .output
            .as_ref()
            .and_then(|o| o.formats.clone())
            .unwrap_or_else(|| vec!["csv".into(), "json".into()]);
        for f in &formats {
            if f != "csv" && f != "json" {
                return Err(cfg_err("output.formats", format!("unknown format '{f}'")));
            }
        }

        let cfg = ExperimentConfig {
            kind,
            model,
            fitness,
            sim,
            event,
            scan,
            minimize,
            partition,
            action_path,
            out_dir: PathBuf::from(out_dir),
            formats,
            raw_text: text.to_string(),
        };
        cfg.check_blocks()?;
        Ok(cfg)
    }

    fn load_fitness(
        f: &RawFitness,
        base: &Path,
        model: Option<&ModelBlock>,
    ) -> Result<FitnessMatrix> {
        let rows: Vec<Vec<f64>> = match (&f.matrix, &f.file) {
            (Some(m), None) => m.clone(),
            (None, Some(file)) => {
                let full = base.join(file);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| cfg_err("fitness.file", format!("{}: {e}", full.display())))?;
                text.lines()
                    .filter(|l| !l.trim().is_empty())
                    .map(|l| {
                        l.split(',')
                            .map(|t| {
                                t.trim()
                                    .parse::<f64>()
                                    .map_err(|e| cfg_err("fitness.file", e))
                            })
                            .collect::<Result<Vec<f64>>>()
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            _ => {
                return Err(cfg_err(
                    "fitness",
                    "give either an inline matrix or a file, exactly one",
                ))
            }
        };
        let v = FitnessMatrix::from_rows(&rows).map_err(|e| cfg_err("fitness.matrix", e))?;
        if let Some(m) = model {
            if v.dim() != m.p.dim() {
                return Err(cfg_err(
                    "fitness.matrix",
                    format!("dimension {} does not match model.p ({})", v.dim(), m.p.dim()),
                ));
            }
        }
        Ok(v)
    }

    /// Per-kind presence checks, named after the missing block.
    fn check_blocks(&self) -> Result<()> {
        use ExperimentKind::*;
        let need = |ok: bool, field: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(cfg_err(field, "required for this experiment kind"))
            }
        };
        match self.kind {
            EquilibriumScan => {
                need(self.model.is_some(), "model")?;
                need(matches!(self.event, Some(EventBlock::Box(_))), "event.box_lo")?;
                need(self.scan.is_some(), "scan")?;
            }
            Simulate => {
                need(self.model.is_some(), "model")?;
                need(self.sim.is_some(), "sim")?;
            }
            GirsanovCheck => {
                need(self.model.is_some(), "model")?;
                need(self.fitness.is_some(), "fitness")?;
                need(self.sim.is_some(), "sim")?;
            }
            Action => {
                need(self.model.is_some(), "model")?;
                need(self.action_path.is_some(), "action.path")?;
            }
            MinimizeAction | QuasiPotential => {
                need(self.model.is_some(), "model")?;
                need(self.minimize.is_some(), "minimize")?;
            }
            PartitionEntropy => {
                need(self.partition.is_some(), "partition")?;
            }
            TubeProb => {
                need(self.model.is_some(), "model")?;
                need(self.sim.is_some(), "sim")?;
                need(matches!(self.event, Some(EventBlock::Tube { .. })), "event.center_path")?;
            }
        }
        Ok(())
    }
}
