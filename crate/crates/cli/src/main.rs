//! `expgraph`: evaluate tail bounds for tree-indexed random fields, simulate
//! fields, and check the bounds numerically.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 certified bound
//! violation, 3 capacity exceeded.

mod commands;
mod config;
mod error;
mod output;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

use commands::{dispatch, Command, Outcome};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "expgraph", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn run(args: impl IntoIterator<Item = OsString>) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap reports usage errors as 2, which is reserved here
            return if e.exit_code() == 0 { 0 } else { 1 };
        }
    };
    exit_code(dispatch(&cli.command))
}

fn exit_code(result: Result<Outcome, CliError>) -> u8 {
    match result {
        Ok(Outcome::Clean) => 0,
        Ok(Outcome::Violation(what)) => {
            eprintln!("violation: {what}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}
