//! Experiment execution and artifact writing.

use std::io::Write;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::config::{EventBlock, ExperimentConfig, ExperimentKind, MinimizeBlock, SimBlock};
use crate::tube::estimate_tube_probability;
use crate::{fmt_float, HarnessError, Result};
use wfld_core::action::{action_neutral, action_selective, gamma_v};
use wfld_core::minimize::{minimize_action, MinimizeError, MinimizeSpec};
use wfld_core::ModelParams;
use wfld_equilibrium::{
    extrapolate_boundary_crossover, extrapolate_gamma_limit, ldp_scan,
};
use wfld_measures::entropy_by_refinement;
use wfld_sim::{girsanov_log_weight, simulate_batch, simulate_fold, SimConfig};

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    /// 0 means the default rayon pool size.
    pub threads: usize,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub kind: ExperimentKind,
    pub out_dir: PathBuf,
    pub values: Value,
}

struct Output {
    header: String,
    rows: Vec<String>,
    values: Value,
    /// Set when the run failed after producing partial rows.
    failure: Option<String>,
}

/// Run one experiment: compute inside a dedicated thread pool, then write
/// `results.csv` and `summary.json` into the output directory. Outputs are
/// byte-identical for a fixed config and seed regardless of thread count;
/// wall-clock metadata is confined to the JSON summary.
pub fn run(cfg: &ExperimentConfig, ov: &RunOverrides) -> Result<RunSummary> {
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ov.threads)
        .build()
        .map_err(|e| HarnessError::Numerical(e.to_string()))?;
    let out = pool.install(|| execute(cfg, ov))?;

    let out_dir = ov.out_dir.clone().unwrap_or_else(|| cfg.out_dir.clone());
    std::fs::create_dir_all(&out_dir)?;

    if cfg.formats.iter().any(|f| f == "csv") {
        let mut file = std::fs::File::create(out_dir.join("results.csv"))?;
        writeln!(file, "{}", out.header)?;
        for row in &out.rows {
            writeln!(file, "{row}")?;
        }
    }

    if cfg.formats.iter().any(|f| f == "json") {
        let wall = started.elapsed().as_secs_f64();
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let summary = json!({
            "kind": cfg.kind.name(),
            "seed": effective_seed(cfg, ov),
            "status": if out.failure.is_some() { "failed" } else { "ok" },
            "failure": out.failure,
            "versions": { "wfld": env!("CARGO_PKG_VERSION") },
            "wall_time_s": wall,
            "timestamp_unix": timestamp,
            "values": out.values,
            "config_echo": cfg.raw_text,
        });
        let mut file = std::fs::File::create(out_dir.join("summary.json"))?;
        writeln!(file, "{}", serde_json::to_string_pretty(&summary).unwrap())?;
    }

    if let Some(msg) = out.failure {
        return Err(HarnessError::Numerical(msg));
    }
    Ok(RunSummary {
        kind: cfg.kind,
        out_dir,
        values: out.values,
    })
}

fn effective_seed(cfg: &ExperimentConfig, ov: &RunOverrides) -> u64 {
    if let Some(s) = ov.seed {
        return s;
    }
    if let Some(sim) = &cfg.sim {
        return sim.seed;
    }
    if let Some(scan) = &cfg.scan {
        return scan.seed;
    }
    0
}

fn sim_config(sim: &SimBlock, seed: u64) -> SimConfig {
    let mut cfg = SimConfig::new(sim.dt, sim.t_end, sim.record_stride, seed);
    cfg.boundary_floor = sim.boundary_floor;
    cfg.zero_noise = sim.zero_noise;
    cfg
}

fn execute(cfg: &ExperimentConfig, ov: &RunOverrides) -> Result<Output> {
    let seed = effective_seed(cfg, ov);
    match cfg.kind {
        ExperimentKind::EquilibriumScan => run_scan(cfg, seed),
        ExperimentKind::Simulate => run_simulate(cfg, seed),
        ExperimentKind::GirsanovCheck => run_girsanov(cfg, seed),
        ExperimentKind::Action => run_action(cfg),
        ExperimentKind::MinimizeAction => run_minimize(cfg),
        ExperimentKind::QuasiPotential => run_quasipotential(cfg),
        ExperimentKind::PartitionEntropy => run_partition(cfg),
        ExperimentKind::TubeProb => run_tube(cfg, seed),
    }
}

fn model_of(cfg: &ExperimentConfig) -> Result<&crate::config::ModelBlock> {
    cfg.model
        .as_ref()
        .ok_or_else(|| HarnessError::Config("model: required".into()))
}

fn params_single(cfg: &ExperimentConfig) -> Result<ModelParams> {
    let m = model_of(cfg)?;
    m.params_at(m.single_gamma()?)
}

fn run_scan(cfg: &ExperimentConfig, seed: u64) -> Result<Output> {
    let model = model_of(cfg)?;
    let scan = cfg.scan.as_ref().unwrap();
    let EventBlock::Box(ebox) = cfg.event.as_ref().unwrap() else {
        return Err(HarnessError::Config(
            "event: equilibrium-scan needs a box event".into(),
        ));
    };
    let template = model.params_at(model.gammas[0])?;
    let rows = ldp_scan(
        &template,
        ebox,
        &model.gammas,
        cfg.fitness.as_ref(),
        scan.mode,
        scan.samples,
        seed,
    )
    .map_err(|e| HarnessError::Numerical(e.to_string()))?;

    let header =
        "gamma,prob,gamma_log_prob,ci_lo,ci_hi,hits,samples,zero_hits,seed".to_string();
    let csv: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                fmt_float(r.gamma),
                fmt_float(r.prob),
                fmt_float(r.gamma_log_prob),
                r.ci.map(|c| fmt_float(c.0)).unwrap_or_default(),
                r.ci.map(|c| fmt_float(c.1)).unwrap_or_default(),
                r.hits.map(|h| h.to_string()).unwrap_or_default(),
                r.samples.map(|s| s.to_string()).unwrap_or_default(),
                u8::from(r.zero_hits),
                seed
            )
        })
        .collect();

    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.gamma, r.gamma_log_prob)).collect();
    let mut values = json!({
        "rows": rows.len(),
        "gamma_log_prob": pts.iter().map(|p| p.1).collect::<Vec<_>>(),
    });
    if pts.len() >= 3 {
        values["extrapolated_limit"] = json!(extrapolate_gamma_limit(&pts));
        values["extrapolated_limit_boundary_crossover"] =
            json!(extrapolate_boundary_crossover(&pts));
    }
    Ok(Output {
        header,
        rows: csv,
        values,
        failure: None,
    })
}

fn run_simulate(cfg: &ExperimentConfig, seed: u64) -> Result<Output> {
    let params = params_single(cfg)?;
    let sim = cfg.sim.as_ref().unwrap();
    let start = sim.start.clone().unwrap_or_else(|| params.p().clone());
    let scfg = sim_config(sim, seed);
    let trajs = simulate_batch(
        &params,
        cfg.fitness.as_ref(),
        &scfg,
        &start,
        sim.trajectories,
    )
    .map_err(|e| HarnessError::Numerical(e.to_string()))?;

    let n = params.dim();
    let coords: Vec<String> = (1..=n).map(|i| format!("x_{i}")).collect();
    let (header, rows) = if sim.trajectories == 1 {
        // single trajectory: the path CSV schema
        let grid = &trajs[0].grid;
        let header = format!("t,{}", coords.join(","));
        let rows = (0..grid.len())
            .map(|r| {
                let mut fields = vec![fmt_float(grid.times()[r])];
                fields.extend(grid.knot(r).iter().map(|&x| fmt_float(x)));
                fields.join(",")
            })
            .collect();
        (header, rows)
    } else {
        let header = format!("traj,gamma,seed,t,{}", coords.join(","));
        let rows = trajs
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let term = t.terminal();
                let mut fields = vec![
                    i.to_string(),
                    fmt_float(params.gamma()),
                    seed.to_string(),
                    fmt_float(t.grid.horizon()),
                ];
                fields.extend(term.weights().iter().map(|&x| fmt_float(x)));
                fields.join(",")
            })
            .collect();
        (header, rows)
    };

    let mut mean = vec![0.0; n];
    for t in &trajs {
        for (m, &x) in mean.iter_mut().zip(t.terminal().weights()) {
            *m += x / sim.trajectories as f64;
        }
    }
    Ok(Output {
        header,
        rows,
        values: json!({ "trajectories": sim.trajectories, "terminal_mean": mean }),
        failure: None,
    })
}

fn run_girsanov(cfg: &ExperimentConfig, seed: u64) -> Result<Output> {
    let params = params_single(cfg)?;
    let v = cfg.fitness.as_ref().unwrap();
    let sim = cfg.sim.as_ref().unwrap();
    let start = sim.start.clone().unwrap_or_else(|| params.p().clone());
    let count = sim.trajectories;

    let neutral_cfg = sim_config(sim, seed);
    let mut selective_cfg = neutral_cfg.clone();
    selective_cfg.seed = seed.wrapping_add(1);

    // weights are computed as each trajectory is produced; full grids never
    // accumulate in memory
    let stats: Vec<(f64, f64)> =
        simulate_fold(&params, None, &neutral_cfg, &start, count, |t| {
            let w = girsanov_log_weight(&params, v, &t).map(f64::exp);
            w.map(|w| (w, t.terminal().get(0)))
        })
        .map_err(|e| HarnessError::Numerical(e.to_string()))?
        .into_iter()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| HarnessError::Numerical(e.to_string()))?;

    let selective: Vec<f64> =
        simulate_fold(&params, Some(v), &selective_cfg, &start, count, |t| {
            t.terminal().get(0)
        })
        .map_err(|e| HarnessError::Numerical(e.to_string()))?;

    let nf = count as f64;
    let mean_w: f64 = stats.iter().map(|s| s.0).sum::<f64>() / nf;
    let var_w: f64 =
        stats.iter().map(|s| (s.0 - mean_w).powi(2)).sum::<f64>() / (nf - 1.0);
    let se_w = (var_w / nf).sqrt();

    let wsum: f64 = stats.iter().map(|s| s.0).sum();
    let reweighted: f64 = stats.iter().map(|s| s.0 * s.1).sum::<f64>() / wsum;
    // delta-method standard error of the self-normalized ratio
    let se_rw = (stats
        .iter()
        .map(|s| (s.0 * (s.1 - reweighted)).powi(2))
        .sum::<f64>())
    .sqrt()
        / wsum;

    let direct: f64 = selective.iter().sum::<f64>() / nf;
    let var_d: f64 =
        selective.iter().map(|x| (x - direct).powi(2)).sum::<f64>() / (nf - 1.0);
    let se_d = (var_d / nf).sqrt();

    let gamma = fmt_float(params.gamma());
    let header = "estimator,value,std_error,gamma,trajectories,seed".to_string();
    let rows = vec![
        format!(
            "mean_weight,{},{},{gamma},{count},{seed}",
            fmt_float(mean_w),
            fmt_float(se_w)
        ),
        format!(
            "reweighted_mean_x1,{},{},{gamma},{count},{seed}",
            fmt_float(reweighted),
            fmt_float(se_rw)
        ),
        format!(
            "direct_mean_x1,{},{},{gamma},{count},{}",
            fmt_float(direct),
            fmt_float(se_d),
            seed.wrapping_add(1)
        ),
    ];
    let rel_gap = (reweighted - direct).abs() / direct.abs().max(1e-300);
    Ok(Output {
        header,
        rows,
        values: json!({
            "mean_weight": mean_w,
            "mean_weight_se": se_w,
            "reweighted_mean_x1": reweighted,
            "reweighted_mean_x1_se": se_rw,
            "direct_mean_x1": direct,
            "direct_mean_x1_se": se_d,
            "relative_gap": rel_gap,
        }),
        failure: None,
    })
}

fn run_action(cfg: &ExperimentConfig) -> Result<Output> {
    let params = params_single(cfg)?;
    let path = cfg.action_path.as_ref().unwrap();
    let neutral = action_neutral(&params, path)
        .map_err(|e| HarnessError::Numerical(e.to_string()))?;

    let header = "action_neutral,action_selective,gamma_v".to_string();
    let (sel_str, gv_str, values) = match cfg.fitness.as_ref() {
        None => (
            String::new(),
            String::new(),
            json!({ "action_neutral": neutral }),
        ),
        Some(v) => {
            let sel = action_selective(&params, v, path)
                .map_err(|e| HarnessError::Numerical(e.to_string()))?;
            let gv = gamma_v(&params, v, path)
                .map_err(|e| HarnessError::Numerical(e.to_string()))?;
            (
                fmt_float(sel),
                fmt_float(gv),
                json!({
                    "action_neutral": neutral,
                    "action_selective": sel,
                    "gamma_v": gv,
                    "identity_residual": neutral - gv - sel,
                }),
            )
        }
    };
    Ok(Output {
        header,
        rows: vec![format!("{},{sel_str},{gv_str}", fmt_float(neutral))],
        values,
        failure: None,
    })
}

fn minimize_spec(params: &ModelParams, m: &MinimizeBlock, horizon: f64) -> MinimizeSpec<f64> {
    let start = m.start.clone().unwrap_or_else(|| params.p().clone());
    let mut spec = MinimizeSpec::new(start, m.end.clone(), horizon, m.knots);
    spec.max_iters = m.max_iters;
    spec.grad_tol = m.grad_tol;
    spec
}

fn run_minimize(cfg: &ExperimentConfig) -> Result<Output> {
    let params = params_single(cfg)?;
    let m = cfg.minimize.as_ref().unwrap();
    if m.horizons.len() != 1 {
        return Err(HarnessError::Config(
            "minimize.horizon: minimize-action needs exactly one horizon".into(),
        ));
    }
    let mut spec = minimize_spec(&params, m, m.horizons[0]);
    spec.with_selection = cfg.fitness.clone();
    let res = minimize_action(&params, &spec, None).map_err(|e| match e {
        MinimizeError::Invalid(err) => HarnessError::Config(format!("minimize: {err}")),
        MinimizeError::Stalled { best } => HarnessError::Numerical(format!(
            "minimizer stalled at gradient norm {} (best action {})",
            best.grad_norm, best.action
        )),
    })?;

    let grid = &res.path;
    let n = grid.dim();
    let coords: Vec<String> = (1..=n).map(|i| format!("x_{i}")).collect();
    let header = format!("t,{}", coords.join(","));
    let rows = (0..grid.len())
        .map(|r| {
            let mut fields = vec![fmt_float(grid.times()[r])];
            fields.extend(grid.knot(r).iter().map(|&x| fmt_float(x)));
            fields.join(",")
        })
        .collect();
    Ok(Output {
        header,
        rows,
        values: json!({
            "achieved_action": res.action,
            "iterations": res.iterations,
            "grad_norm": res.grad_norm,
            "horizon": m.horizons[0],
            "knots": m.knots,
        }),
        failure: None,
    })
}

fn run_quasipotential(cfg: &ExperimentConfig) -> Result<Output> {
    let params = params_single(cfg)?;
    let m = cfg.minimize.as_ref().unwrap();

    let header = "horizon,action,running_min".to_string();
    let mut rows = Vec::new();
    let mut table = Vec::new();
    let mut running = f64::INFINITY;
    let mut failure = None;
    for &t in &m.horizons {
        let mut spec = minimize_spec(&params, m, t);
        spec.with_selection = cfg.fitness.clone();
        match minimize_action(&params, &spec, None) {
            Ok(res) => {
                running = running.min(res.action);
                rows.push(format!(
                    "{},{},{}",
                    fmt_float(t),
                    fmt_float(res.action),
                    fmt_float(running)
                ));
                table.push(json!({ "horizon": t, "action": res.action, "running_min": running }));
            }
            Err(e) => {
                // flush what we have and mark the run failed
                failure = Some(format!("horizon {t}: {e}"));
                break;
            }
        }
    }
    Ok(Output {
        header,
        rows,
        values: json!({ "table": table, "quasi_potential": running }),
        failure,
    })
}

fn run_partition(cfg: &ExperimentConfig) -> Result<Output> {
    let p = cfg.partition.as_ref().unwrap();
    let table = entropy_by_refinement(&p.mu, &p.nu, p.max_level);
    let header = "level,cells,projected,closed_form".to_string();
    let rows = table
        .rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{}",
                r.level,
                r.cells,
                fmt_float(r.projected),
                fmt_float(table.closed_form)
            )
        })
        .collect();
    Ok(Output {
        header,
        rows,
        values: json!({
            "closed_form": table.closed_form,
            "final_projected": table.rows.last().map(|r| r.projected),
            "levels": table.rows.len(),
        }),
        failure: None,
    })
}

fn run_tube(cfg: &ExperimentConfig, seed: u64) -> Result<Output> {
    let model = model_of(cfg)?;
    let sim = cfg.sim.as_ref().unwrap();
    let EventBlock::Tube { center, delta } = cfg.event.as_ref().unwrap() else {
        return Err(HarnessError::Config(
            "event: tube-prob needs center_path and delta".into(),
        ));
    };

    let header =
        "gamma,trials,hits,prob,ci_lo,ci_hi,gamma_log_prob,zero_hits,seed".to_string();
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for (idx, &gamma) in model.gammas.iter().enumerate() {
        let params = model.params_at(gamma)?;
        let row_seed = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(idx as u64 + 1));
        let scfg = sim_config(sim, row_seed);
        let est = estimate_tube_probability(
            &params,
            &scfg,
            center,
            *delta,
            sim.trajectories,
            row_seed,
        )?;
        rows.push(format!(
            "{},{},{},{},{},{},{},{},{row_seed}",
            fmt_float(est.gamma),
            est.trials,
            est.hits,
            fmt_float(est.prob),
            fmt_float(est.ci.0),
            fmt_float(est.ci.1),
            fmt_float(est.gamma_log_prob),
            u8::from(est.zero_hits)
        ));
        table.push(json!({
            "gamma": est.gamma,
            "prob": est.prob,
            "gamma_log_prob": est.gamma_log_prob,
            "hits": est.hits,
            "zero_hits": est.zero_hits,
        }));
    }
    Ok(Output {
        header,
        rows,
        values: json!({ "table": table, "delta": delta }),
        failure: None,
    })
}
