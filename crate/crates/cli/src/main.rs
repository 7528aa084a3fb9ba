//! `pemnet`: corpus synthesis, training, imitation benchmark, interaction runs
//! and reports from one flat config file.
//!
//! Exit codes: 0 success, 1 domain error (divergence, missing inputs), 2 usage
//! or config error.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::{RunConfig, OUT_ENV};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn message(&self) -> String {
        match self {
            CliError::Config(m) | CliError::Domain(m) => m.clone(),
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pemnet", version, about = "Predictive-coding agents: imitation benchmark and two-agent interaction")]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Master seed (same as `--set seed=N`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; never changes any output.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Write the synthetic gesture corpus.
    SynthData,
    /// Train one model per (condition, seed).
    Train,
    /// Score imitation with and without inference for every trained model.
    EvalImitation,
    /// Run the two-agent interaction trials.
    RunRri,
    /// Label the interaction trajectories.
    Classify,
    /// Collect the tables into one text report.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::SynthData => "synth-data",
            Command::Train => "train",
            Command::EvalImitation => "eval-imitation",
            Command::RunRri => "run-rri",
            Command::Classify => "classify",
            Command::Report => "report",
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text, &path.display().to_string())?;
    }
    if let Ok(out) = std::env::var(OUT_ENV) {
        cfg.set("out_dir", &out)
            .map_err(|e| CliError::Config(format!("{OUT_ENV}: {}", e.message())))?;
    }
    if let Some(seed) = cli.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(cli)?;
    let jobs = cli
        .jobs
        .map(|j| j as usize)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Domain(format!("thread pool: {e}")))?;
    let name = cli.command.name();
    eprintln!("[{name}] out_dir {} jobs {jobs}", cfg.out_dir().display());
    pool.install(|| match cli.command {
        Command::SynthData => commands::synth_data(&cfg),
        Command::Train => commands::train(&cfg),
        Command::EvalImitation => commands::eval_imitation(&cfg),
        Command::RunRri => commands::run_rri(&cfg),
        Command::Classify => commands::classify(&cfg),
        Command::Report => commands::report(&cfg),
    })?;
    commands::write_resolved(&cfg, name)?;
    let n = manifest::write_manifest(&cfg.out_dir())?;
    eprintln!("[{name}] done; run.manifest lists {n} artifacts");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pemnet: {e}");
            ExitCode::from(e.code())
        }
    }
}
