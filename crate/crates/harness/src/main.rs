use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wfld_harness::{run, ExperimentConfig, ExperimentKind, RunOverrides};

#[derive(Parser)]
#[command(
    name = "wfld",
    about = "Numerical laboratory for small-sampling-rate Wright-Fisher diffusions: \
             equilibrium sweeps, path simulation, action functionals and minimal-action paths",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config file (TOML)
    #[arg(long)]
    config: PathBuf,

    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,

    /// Override the output directory
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads (0 = all cores); results are thread-count invariant
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep gamma*log P(box) under the stationary law
    EquilibriumScan(CommonArgs),
    /// Euler-Maruyama trajectories of the diffusion
    Simulate(CommonArgs),
    /// Cross-check the change-of-measure weights against direct simulation
    GirsanovCheck(CommonArgs),
    /// Evaluate path action functionals on a stored path
    Action(CommonArgs),
    /// Minimize the path action between fixed endpoints
    MinimizeAction(CommonArgs),
    /// Minimal action over a schedule of horizons
    Quasipotential(CommonArgs),
    /// Relative entropy by partition refinement
    PartitionEntropy(CommonArgs),
    /// Probability of staying in a sup-norm tube around a reference path
    TubeProb(CommonArgs),
}

impl Command {
    fn split(self) -> (ExperimentKind, CommonArgs) {
        match self {
            Command::EquilibriumScan(a) => (ExperimentKind::EquilibriumScan, a),
            Command::Simulate(a) => (ExperimentKind::Simulate, a),
            Command::GirsanovCheck(a) => (ExperimentKind::GirsanovCheck, a),
            Command::Action(a) => (ExperimentKind::Action, a),
            Command::MinimizeAction(a) => (ExperimentKind::MinimizeAction, a),
            Command::Quasipotential(a) => (ExperimentKind::QuasiPotential, a),
            Command::PartitionEntropy(a) => (ExperimentKind::PartitionEntropy, a),
            Command::TubeProb(a) => (ExperimentKind::TubeProb, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();

    let cfg = match ExperimentConfig::load(&args.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if cfg.kind != kind {
        eprintln!(
            "error: config error: kind: config declares '{}' but the subcommand is '{}'",
            cfg.kind.name(),
            kind.name()
        );
        return ExitCode::from(2);
    }

    let overrides = RunOverrides {
        seed: args.seed,
        out_dir: args.out,
        threads: args.threads,
    };
    match run(&cfg, &overrides) {
        Ok(summary) => {
            println!(
                "{}: wrote {}",
                summary.kind.name(),
                summary.out_dir.join("results.csv").display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
