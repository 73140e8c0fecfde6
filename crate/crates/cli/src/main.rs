//! `macdet`: batch experiment runner.
//!
//! ```text
//! macdet <experiment> --config <path> [--seed S] [--out <path>] [--format csv|json]
//! ```
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical
//! non-convergence (rows are still written, with `nan` where a solve failed),
//! 1 anything else.

mod config;
mod experiments;
mod output;
mod presets;

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use macdet_core::Execution;

use config::{Config, Experiment, Format};
use experiments::Outcome;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] macdet_core::Error),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Core(macdet_core::Error::InvalidParameter { .. }) => 2,
            CliError::Core(macdet_core::Error::NotConverged { .. }) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "macdet",
    version,
    about = "Error-exponent and detection experiments for sensor networks over fading MACs"
)]
struct Cli {
    /// Experiment or figure preset to run.
    #[arg(value_enum)]
    experiment: Experiment,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; overrides the config. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; overrides the config.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let mut cfg = config::load(&cli.config, cli.experiment)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.output = Some(out);
    }
    if let Some(format) = cli.format {
        cfg.format = format;
    }
    let outcome = execute(&cfg, Execution::default())?;
    match &cfg.output {
        Some(path) => output::write_rows(&outcome.rows, cfg.format, BufWriter::new(File::create(path)?))?,
        None => output::write_rows(&outcome.rows, cfg.format, io::stdout().lock())?,
    }
    Ok(outcome)
}

fn execute(cfg: &Config, exec: Execution) -> Result<Outcome, CliError> {
    match cfg.experiment {
        Experiment::ExponentSweep => experiments::exponent_sweep(cfg),
        Experiment::Montecarlo => experiments::montecarlo(cfg, exec),
        Experiment::Schemes => experiments::schemes(cfg, exec),
        Experiment::SdrCompare => experiments::sdr_compare(cfg, exec),
        Experiment::Asymptotic => experiments::asymptotic(cfg, exec),
        _ => presets::run(cfg, exec),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(outcome) if outcome.nonconverged > 0 => {
            eprintln!(
                "macdet: {} solve(s) hit the iteration limit; affected rows hold nan",
                outcome.nonconverged
            );
            ExitCode::from(3)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("macdet: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
