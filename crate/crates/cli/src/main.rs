use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use vrpsim::config::{Preset, RunConfig, Scenario};
use vrpsim::run::execute;

/// Sweeps, validation runs and feasibility reports for virtual radiation
/// pressure in ultrastrongly coupled optomechanics.
#[derive(Parser, Debug)]
#[command(name = "vrpsim", version)]
struct Cli {
    scenario: Scenario,
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (also `VRPSIM_OUT_DIR`).
    #[arg(long, env = "VRPSIM_OUT_DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let user = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    let mut cfg = match cli.preset {
        Some(p) => RunConfig::preset(p).overlay(user)?,
        None => user,
    };
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<bool> {
        let cfg = load(&cli)?;
        let dir = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("vrpsim-out"));
        Ok(execute(cli.scenario, &cfg, &dir)?.success)
    };
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
