use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use inexact_mg_cli::config::ExperimentConfig;
use inexact_mg_cli::experiments::{self, Experiment, Report};

/// Multigrid V-cycle experiments with inexact coarsest-level solves.
#[derive(Parser)]
#[command(name = "inexact-mg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact vs relative-residual coarse solves across a tolerance sweep.
    Motivating(Common),
    /// Relative-error oracle stopping for each γ; attainable accuracy.
    RelativeGamma(Common),
    /// Relative-residual stopping with τ derived from estimated norms.
    RelresEstimate(Common),
    /// Absolute-error oracle stopping with ε = θ(1 - ‖E‖_A).
    AbsoluteEps(Common),
    /// Gauss-Radau and residual-bound stopping against the error oracle.
    AbsStopping(Common),
    /// Coarse work of the computable rules vs the best relative-residual tolerance.
    Performance(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Use the full-size hierarchy (`full_levels`).
    #[arg(long = "paper-scale")]
    full_scale: bool,
    /// Seed for power-iteration start vectors.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn run(cli: Cli) -> Result<Report> {
    let (common, f): (&Common, Experiment) = match &cli.command {
        Command::Motivating(c) => (c, experiments::motivating),
        Command::RelativeGamma(c) => (c, experiments::relative_gamma),
        Command::RelresEstimate(c) => (c, experiments::relres_estimate),
        Command::AbsoluteEps(c) => (c, experiments::absolute_eps),
        Command::AbsStopping(c) => (c, experiments::abs_stopping),
        Command::Performance(c) => (c, experiments::performance),
    };
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if common.full_scale {
        cfg = cfg.full_scale();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    f(&cfg, &common.out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(report) => {
            for file in &report.files {
                println!("wrote {}", file.display());
            }
            for n in &report.notes {
                println!("note: {n}");
            }
            if report.violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                for v in &report.violations {
                    eprintln!("violation: {v}");
                }
                ExitCode::from(2)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
