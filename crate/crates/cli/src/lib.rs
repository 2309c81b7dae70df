//! Command-line front end for the `necklace` crate.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io;

use clap::Parser;

use config::{Cli, Command};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// `verify` ran but at least one check failed.
    pub const CHECKS_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const IO: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Numerical(#[from] necklace::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Numerical(necklace::Error::Domain(_)) => exit::USAGE,
            CliError::Numerical(_) => exit::NUMERICAL,
            CliError::Io(_) => exit::IO,
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let emit = |name, config, artifacts: Vec<output::Artifact>, out| -> Result<i32, CliError> {
        output::emit(name, config, &artifacts, out)?;
        Ok(exit::OK)
    };
    match &cli.command {
        Command::Bands(a) => emit("bands", &serde_json::to_value(a).unwrap(), commands::bands(a)?, &a.output),
        Command::Map(a) => emit("map", &serde_json::to_value(a).unwrap(), commands::map(a)?, &a.output),
        Command::Homoclinic(a) => emit("homoclinic", &serde_json::to_value(a).unwrap(), commands::homoclinic(a)?, &a.output),
        Command::Boundstate(a) => emit("boundstate", &serde_json::to_value(a).unwrap(), commands::boundstate(a)?, &a.output),
        Command::Sweep(a) => emit("sweep", &serde_json::to_value(a).unwrap(), commands::sweep(a)?, &a.output),
        Command::Verify(a) => {
            let results = commands::verify_checks(a)?;
            let all = results.iter().all(|r| r.passed);
            emit("verify", &serde_json::to_value(a).unwrap(), vec![commands::verify_artifact(&results)], &a.output)?;
            for r in results.iter().filter(|r| !r.passed) {
                eprintln!("FAILED {}: {} (threshold {})", r.name, r.value, r.threshold);
            }
            Ok(if all { exit::OK } else { exit::CHECKS_FAILED })
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        // a closed downstream pipe (`| head`) is not an error
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
