//! Experiment runner for inexact proximal-gradient methods.
//!
//! `ipg run` writes per-strategy traces and a ranking at equal inner-iteration cost,
//! `ipg bounds` checks every iterate against its theoretical bound and `ipg rates`
//! fits empirical convergence slopes.

pub mod commands;
pub mod error;
pub mod output;
pub mod settings;
pub mod spec;

use std::ffi::OsString;

use clap::{Parser, Subcommand};

pub use error::CliError;
pub use settings::{ExperimentArgs, ExperimentSpec};

#[derive(Debug, Parser)]
#[command(name = "ipg", version, about = "Inexact proximal-gradient experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run each strategy and write its trace plus a ranking.
    Run(ExperimentArgs),
    /// Compare each iterate with its convergence bound.
    Bounds(ExperimentArgs),
    /// Fit convergence slopes.
    Rates(ExperimentArgs),
}

/// Parses `args`, runs the command, prints its report and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let (args, driver): (&ExperimentArgs, fn(&ExperimentSpec) -> error::Result<String>) = match &cli.command {
        Command::Run(a) => (a, commands::cmd_run),
        Command::Bounds(a) => (a, commands::cmd_bounds),
        Command::Rates(a) => (a, commands::cmd_rates),
    };
    match args.resolve().and_then(|spec| driver(&spec)) {
        Ok(report) => {
            print!("{report}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
