//! `normsol`: batch front end for normalized-solution computations.
//!
//! Every subcommand writes a CSV table and a JSON record (resolved config,
//! version, scalar results) into `--out`. Exit status: 0 on success, 1 on
//! usage errors, 2 when a computation fails.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::{Flags, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Compute(#[from] normsol_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Compute(_) | CliError::Io(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "normsol", version, about = "Normalized solutions of -v'' + (V + λ) v = v^p")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Radial ground state U: profile (r, U, U') and σ₀, 𝔠.
    GroundState(Flags),
    /// Correction W of the linearized problem and the constant 𝔪.
    Correction(Flags),
    /// Explicit boundary layer on (-1, 1) and its interaction integral Θ_ε.
    BoundaryLayer(Flags),
    /// Direct solve at prescribed mass (--rho) or frequency (--epsilon).
    Solve(Flags),
    /// Mass along a list of ε.
    Trace(Flags),
    /// Compare numerics with an asymptotic prediction.
    Verify(Flags),
    /// Hopf-Cole transform of a direct solve into an MFG equilibrium.
    Mfg(Flags),
}

impl Command {
    fn split(&self) -> (&'static str, &Flags) {
        match self {
            Command::GroundState(f) => ("ground-state", f),
            Command::Correction(f) => ("correction", f),
            Command::BoundaryLayer(f) => ("boundary-layer", f),
            Command::Solve(f) => ("solve", f),
            Command::Trace(f) => ("trace", f),
            Command::Verify(f) => ("verify", f),
            Command::Mfg(f) => ("mfg", f),
        }
    }
}

fn run(command: &Command) -> Result<(), CliError> {
    let (name, flags) = command.split();
    let cfg = RunConfig::resolve(name, flags)?;
    log::debug!("resolved config: {cfg:?}");
    let artifacts = match command {
        Command::GroundState(_) => commands::cmd_ground_state(&cfg),
        Command::Correction(_) => commands::cmd_correction(&cfg),
        Command::BoundaryLayer(_) => commands::cmd_boundary_layer(&cfg),
        Command::Solve(_) => commands::cmd_solve(&cfg),
        Command::Trace(_) => commands::cmd_trace(&cfg),
        Command::Verify(_) => commands::cmd_verify(&cfg),
        Command::Mfg(_) => commands::cmd_mfg(&cfg),
    }?;
    for artifact in &artifacts {
        let path = output::write_atomic(&cfg.out, artifact)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
