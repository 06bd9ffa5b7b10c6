use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use gsocp_cli::config::{resolve, FileConfig, Flags, Mode};
use gsocp_cli::run::{self, emit, RESIDUAL_CONTROL_SAMPLES};

#[derive(Parser)]
#[command(
    name = "gsocp",
    version,
    about = "Dynamic-programming schemes for G-expectation control problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve at the largest N; summary to stdout, time-0 field to --out.
    Solve,
    /// Error table and fitted rate over --n-list.
    Converge,
    /// HJB residual of the exact solution on a 5x5 interior sample.
    Residual,
    /// Monte Carlo lower bound for the scheme's policy at volatility --theta.
    Oracle,
}

fn execute(cli: Cli) -> Result<()> {
    let mode = match cli.command {
        Command::Solve => Mode::Solve,
        Command::Converge => Mode::Converge,
        Command::Residual => Mode::Residual,
        Command::Oracle => Mode::Oracle,
    };
    let file = match &cli.flags.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let mut cfg = resolve(mode, &cli.flags, &file)?;
    if mode == Mode::Residual && cli.flags.controls.is_none() && file.controls.is_none() {
        cfg.control_samples = RESIDUAL_CONTROL_SAMPLES;
    }
    let out = cfg.out.as_deref();
    match mode {
        Mode::Converge => {
            let report = run::run_converge(&cfg)?;
            emit(out, |w| report.write_csv(w))?;
        }
        Mode::Solve => {
            let outcome = run::run_solve(&cfg)?;
            if out.is_some() {
                emit(out, |w| Ok(outcome.write_field(w)?))?;
            }
            emit(None, |w| Ok(outcome.write_summary(w)?))?;
        }
        Mode::Residual => {
            let report = run::run_residual(&cfg)?;
            emit(out, |w| Ok(report.write_csv(w)?))?;
        }
        Mode::Oracle => {
            let report = run::run_oracle(&cfg)?;
            emit(out, |w| Ok(report.write_csv(w)?))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
