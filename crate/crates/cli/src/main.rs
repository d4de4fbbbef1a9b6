//! `hyperbergman`: Bergman kernel densities on hyperbolic surfaces from the
//! command line.
//!
//! Exit status: 0 ok, 1 verification failure, 2 domain or input error,
//! 3 uncertified result under `--require-certified`.

mod cache;
mod commands;
mod config;
mod error;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Keys, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "hyperbergman",
    version,
    about = "Bergman kernel densities on hyperbolic surfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Density ρ_k at points, by mode sum, loop sum or both.
    Rho(Keys),
    /// Run the identity suite and report residuals.
    Verify(Keys),
    /// Off-diagonal kernel against the segment bound on a cylinder grid.
    Offdiag(Keys),
    /// Locate extrema of ρ_k relative to the systole.
    Scan(Keys),
    /// Integrate ρ_k over the genus-2 fundamental octagon.
    Dimcheck(Keys),
    /// Dump an orbit ball.
    Orbit(Keys),
}

type Handler = fn(&RunConfig) -> Result<commands::Outcome, CliError>;

fn run(cli: Cli) -> Result<commands::Outcome, CliError> {
    let (keys, f): (&Keys, Handler) = match &cli.command {
        Command::Rho(k) => (k, commands::rho),
        Command::Verify(k) => (k, commands::verify),
        Command::Offdiag(k) => (k, commands::offdiag),
        Command::Scan(k) => (k, commands::scan),
        Command::Dimcheck(k) => (k, commands::dimcheck),
        Command::Orbit(k) => (k, commands::orbit),
    };
    let cfg = RunConfig::resolve(keys)?;
    let out = f(&cfg)?;
    match &cfg.output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            out.report.write(cfg.format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            out.report.write(cfg.format, &mut w)?;
            w.flush()?;
        }
    }
    if cfg.require_certified && !out.certified {
        eprintln!("result is not certified");
        return Ok(commands::Outcome {
            certified: false,
            ..out
        });
    }
    Ok(commands::Outcome {
        certified: true,
        ..out
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) if !out.passed => ExitCode::from(1),
        Ok(out) if !out.certified => ExitCode::from(3),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
