//! `twisted`: batch runs of the twisted cohomological equation solver.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error.

mod commands;
mod config;
mod grid;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Outcome;
use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Core(#[from] twisted_cohomology::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "twisted",
    version,
    about = "Solve and verify (X+m)f = g over parameter grids"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags that override keys of the config file.
#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for generated data vectors.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Residual tolerance relative to ‖g‖₀.
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,
    /// Truncation radius K of the least-squares oracle.
    #[arg(long, global = true, value_name = "K")]
    truncation: Option<i64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for one coefficient file at every twist of the grid.
    Solve {
        /// Coefficient vector in JSON form.
        input: PathBuf,
        /// Twist, replacing the configured grid.
        #[arg(long, allow_negative_numbers = true)]
        m: Option<f64>,
        /// Also split at this index and report the one-sided solution.
        #[arg(long, allow_negative_numbers = true, value_name = "N")]
        one_sided: Option<i64>,
    },
    /// Certify the coefficient bounds of basic solutions over the grid.
    VerifyBounds,
    /// Check coboundary annihilation and the residual identity over the grid.
    VerifyDistributions,
    /// Measure growth, L² and tame ratios and distribution norms; write plot data.
    Sweep,
    /// Run every suite and write a combined summary.
    Report,
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(tol) = common.tol {
        cfg.tol = tol;
    }
    if let Some(k) = common.truncation {
        cfg.truncation = k;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let mut cfg = load(&cli.common)?;
    match cli.command {
        Command::Solve {
            input,
            m,
            one_sided,
        } => {
            if let Some(m) = m {
                cfg.m_grid = vec![m];
                cfg.validate()?;
            }
            commands::solve(&cfg, &input, one_sided)
        }
        Command::VerifyBounds => commands::verify_bounds(&cfg).map(|r| r.0),
        Command::VerifyDistributions => commands::verify_distributions(&cfg).map(|r| r.0),
        Command::Sweep => commands::sweep(&cfg).map(|_| Outcome::Passed),
        Command::Report => commands::report(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
