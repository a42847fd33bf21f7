//! `xysim` command-line front end.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{CommonArgs, RunConfig, SEED_ENV};

#[derive(Debug, Parser)]
#[command(name = "xysim", version, about = "Disentangling circuits and simulations for the XY spin model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Energy spectrum (closed form for two sites, sector-resolved for chains).
    Spectrum,
    /// Prepare an eigenstate and dump its amplitudes or density matrix.
    Prepare,
    /// Emit the disentangling circuit.
    Circuit,
    /// Photonic CNOT diagnostics.
    Optics,
    /// Exact and noisy correlators across a grid of mixing angles.
    Sweep,
    /// Simulated tomography across a grid of mixing angles.
    Tomo,
    /// Time evolution after a quench.
    Quench,
}

fn run(cli: Cli) -> Result<()> {
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = RunConfig::resolve(&cli.common, env_seed)?;
    let text = if cli.common.show_config {
        serde_json::to_string_pretty(&cfg)? + "\n"
    } else {
        let report = match cli.command {
            Command::Spectrum => commands::spectrum(&cfg)?,
            Command::Prepare => commands::prepare(&cfg)?,
            Command::Circuit => commands::circuit(&cfg)?,
            Command::Optics => commands::optics(&cfg)?,
            Command::Sweep => commands::sweep(&cfg)?,
            Command::Tomo => commands::tomo(&cfg)?,
            Command::Quench => commands::quench(&cfg)?,
        };
        report.render(cfg.format)
    };
    match &cli.common.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
