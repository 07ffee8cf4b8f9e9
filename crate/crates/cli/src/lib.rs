//! Command-line driver for the echo-chamber simulator.

pub mod args;
pub mod commands;
pub mod error;
pub mod manifest;
pub mod params;
pub mod serve;
pub mod svg;

use std::process::ExitCode;

use clap::Parser;

pub use args::Cli;
pub use error::{CliError, Result};

/// Parses `argv`, runs the command and maps failures to exit codes.
pub fn main_with_args<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
