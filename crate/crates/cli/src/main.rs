mod config;
mod props;
mod report;
mod simulate;
mod sweep;
mod wire;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Classical simulation of entangled-qubit measurement statistics with
/// bounded communication, checked against the Born rule.
#[derive(Debug, Parser)]
#[command(name = "entsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a protocol over a setting grid and verify it against the oracle
    Simulate(config::RunArgs),
    /// Communication cost against p, picking the cheapest protocol per point
    Sweep(sweep::SweepArgs),
    /// Check the analytic properties of the sampling densities
    Props(props::PropsArgs),
    /// Run Alice and Bob as separate processes over local sockets
    WireRun(wire::WireRunArgs),
    /// Audit a binary transcript log
    Audit(wire::AuditArgs),
    #[command(hide = true)]
    WireAlice(wire::AliceArgs),
    #[command(hide = true)]
    WireBob(wire::BobArgs),
}

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or configuration; exit 2.
    Usage(String),
    /// A check did not pass; exit 1.
    Failed(String),
    Runtime(entsim::Error),
}

impl From<entsim::Error> for CliError {
    fn from(e: entsim::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Sweep(a) => sweep::run(a),
        Command::Props(a) => props::run(a),
        Command::WireRun(a) => wire::run(a),
        Command::Audit(a) => wire::audit(a),
        Command::WireAlice(a) => wire::alice(a),
        Command::WireBob(a) => wire::bob(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(m)) => {
            eprintln!("FAIL: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
