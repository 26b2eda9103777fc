//! Configuration, orchestration and result bundles for the `dipolesim`
//! command line.
//!
//! Every subcommand resolves an [`ExperimentConfig`] (TOML file, then
//! `--set` overrides, then the dedicated flags), runs one experiment into a
//! [`Report`] and writes it as CSV tables plus `summary.json`. The resolved
//! config is saved next to them as `config.toml`, so
//! `dipolesim <command> --config <out>/config.toml` replays the run.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{ExperimentConfig, Format};
pub use error::CliError;
pub use report::{Check, Report, Table};

/// Environment override for the output directory.
pub const OUT_DIR_ENV: &str = "DIPOLESIM_OUT_DIR";
/// Environment override for the worker count.
pub const WORKERS_ENV: &str = "DIPOLESIM_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "dipolesim", version, about = "Dipole-conserving growth and transport experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML experiment config; defaults apply to anything it leaves out.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Override one config entry, e.g. `--set equation.g=0.25`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Master seed (overrides `ensemble.master_seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads; 0 uses every core. Output does not depend on it.
    #[arg(long, global = true, env = WORKERS_ENV)]
    pub workers: Option<usize>,

    /// Output directory (overrides `output.directory`).
    #[arg(long, global = true, env = OUT_DIR_ENV, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Write only this format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Run the ensembles of every configured size.
    Simulate,
    /// Data collapse of roughness curves, simulated or read back.
    Collapse {
        /// `roughness.csv` from an earlier run instead of simulating.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Exact spin-model battery.
    Lindblad,
    /// Tilt identity on an open window.
    TiltTest,
    /// Linear equations against the exact mode-sum oracle.
    Calibrate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Collapse { .. } => "collapse",
            Command::Lindblad => "lindblad",
            Command::TiltTest => "tilt-test",
            Command::Calibrate => "calibrate",
        }
    }
}

/// Resolves the config of `cli`: file, `--set`, then `--seed`, `--out` and
/// `--format`.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut overrides = cli.set.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("ensemble.master_seed={seed}"));
    }
    let mut cfg = ExperimentConfig::load(cli.config.as_deref(), &overrides)?;
    if let Some(out) = &cli.out {
        cfg.output.directory = out.clone();
    }
    if let Some(f) = cli.format {
        cfg.output.formats = vec![f];
    }
    Ok(cfg)
}

/// Runs one command on a resolved config.
pub fn run_command(
    command: &Command,
    cfg: &ExperimentConfig,
    workers: usize,
) -> Result<Report, CliError> {
    let mut report = match command {
        Command::Simulate => experiments::simulate(cfg, workers)?.0,
        Command::Collapse { input: Some(path) } => {
            let series = report::read_roughness_csv(path)?;
            experiments::collapse(cfg, &series)?
        }
        Command::Collapse { input: None } => experiments::simulate_and_collapse(cfg, workers)?,
        Command::Lindblad => experiments::lindblad(cfg)?,
        Command::TiltTest => experiments::tilt_test(cfg)?,
        Command::Calibrate => experiments::calibrate(cfg, workers)?,
    };
    report.command = command.name().to_string();
    report.apply_expectations(&cfg.analysis.expect)?;
    Ok(report)
}

/// Full pipeline behind the binary: resolve, run, write.
pub fn execute(cli: &Cli) -> Result<(Report, Vec<PathBuf>), CliError> {
    let cfg = resolve_config(cli)?;
    let report = run_command(&cli.command, &cfg, cli.workers.unwrap_or(0))?;
    let dir = &cfg.output.directory;
    let mut written = report.write(&cfg, dir, &cfg.output.formats)?;
    let resolved = dir.join("config.toml");
    let text = toml::to_string(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::write(&resolved, text)?;
    written.push(resolved);
    Ok((report, written))
}
