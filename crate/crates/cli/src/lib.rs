//! Command-line front end for the `lads` library: stream conversion, frame
//! rendering, annotation filtering, benchmarks, metrics and the tuning server.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O, 3 validation.

mod args;
mod commands;
pub mod server;

use std::ffi::OsString;
use std::fmt;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::Cli;

/// A failed command, carrying its exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Io(anyhow::Error),
    Validation(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Io(_) => 2,
            Failure::Validation(_) => 3,
        }
    }

    pub(crate) fn io(e: impl Into<anyhow::Error>) -> Self {
        Failure::Io(e.into())
    }

    pub(crate) fn invalid(e: impl Into<anyhow::Error>) -> Self {
        Failure::Validation(e.into())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Io(e) => write!(f, "{e:#}"),
            Failure::Validation(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<lads::events::EventError> for Failure {
    fn from(e: lads::events::EventError) -> Self {
        if e.is_io() {
            Failure::io(e)
        } else {
            Failure::invalid(e)
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.code()
        }
    }
}
