//! `guardian`: codec, rules, analysis and simulation from the command line.
//!
//! Exit status is 0 on success, 1 when the input is well-formed but the
//! operation fails (bad rules file, invalid scenario, out-of-domain
//! parameters) and 2 for usage errors. Reports go to stdout, diagnostics to
//! stderr.

mod analyze;
mod frame;
mod num;
mod rules;
mod simulate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

#[derive(Parser, Debug)]
#[command(name = "guardian", version, about = "Reactive 802.15.4 firewall toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encode or decode 802.15.4 frames as hex strings
    #[command(subcommand)]
    Frame(frame::FrameCmd),
    /// Validate gtables rules files
    #[command(subcommand)]
    Rules(rules::RulesCmd),
    /// Classify one frame against a rules file
    Match(rules::MatchArgs),
    /// Attack ranges, energy cost, false-positive rate and reaction timing
    #[command(subcommand)]
    Analyze(analyze::AnalyzeCmd),
    /// Run scenario files through the simulator
    Simulate(simulate::SimulateArgs),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn domain(e: impl std::fmt::Display) -> Self {
        CliError::Domain(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = std::io::stdout().lock();
    let result = match cli.command {
        Command::Frame(c) => frame::run(c, &mut out),
        Command::Rules(c) => rules::run(c, &mut out),
        Command::Match(a) => rules::run_match(a, &mut out),
        Command::Analyze(c) => analyze::run(c, &mut out),
        Command::Simulate(a) => simulate::run(a, &mut out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // A closed reader (`| head`) is not a failure of the command.
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Domain(_) | CliError::Io(_) => 1,
                CliError::Usage(_) => 2,
            })
        }
    }
}
