//! Command-line front end for `muss-core`.
//!
//! Subcommands: `gen`, `cluster`, `select`, `bench`, `verify`. Exit codes are
//! 0 on success, 1 for usage errors, 2 for runtime or data errors and 3 when
//! `verify` finds a bound violation.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod files;
pub mod formats;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use crate::args::{Cli, Command};
pub use crate::error::{CliError, Result};

/// Parses `argv` (including the program name) and runs the command.
pub fn run(argv: Vec<OsString>, out: &mut dyn Write) -> Result<()> {
    let argv = config::apply_config(argv)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                write!(out, "{e}").map_err(|e| CliError::runtime(e.to_string()))?;
                return Ok(());
            }
            let text = e.render().to_string();
            return Err(CliError::usage(text.trim_end().trim_start_matches("error: ")));
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match &cli.command {
        Command::Gen(a) => commands::gen(a, out),
        Command::Cluster(a) => commands::cluster(a, out),
        Command::Select(a) => commands::select(a, out),
        Command::Bench(a) => commands::bench(a, out),
        Command::Verify(a) => commands::verify(a, out),
    }
}
