mod args;
mod commands;
mod manifest;
mod settings;

use std::process::ExitCode;

use clap::Parser;
use hfpoint::ErrorKind;

use args::Cli;

/// Exit codes: 2 arguments, 3 I/O, 4 numeric or degenerate input, 5 plugin.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn argument(error: anyhow::Error) -> Self {
        Failure { code: 2, error }
    }

    pub fn io(error: anyhow::Error) -> Self {
        Failure { code: 3, error }
    }

    pub fn internal(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }

    pub fn code_for(kind: ErrorKind) -> u8 {
        match kind {
            ErrorKind::Argument => 2,
            ErrorKind::Io => 3,
            ErrorKind::Numeric => 4,
            ErrorKind::Plugin => 5,
        }
    }
}

impl From<hfpoint::Error> for Failure {
    fn from(e: hfpoint::Error) -> Self {
        Failure {
            code: Failure::code_for(e.kind()),
            error: e.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
