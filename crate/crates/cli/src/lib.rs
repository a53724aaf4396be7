//! Command-line front end for the `qgt-core` library.
//!
//! Exit codes: 0 on success, 1 on runtime failure (exhaustive budget exceeded,
//! no transition found, a self-check that did not pass, I/O), 2 on usage errors.

pub mod args;
pub mod commands;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::{Cli, Command, Params};
pub use commands::{execute, Outputs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<qgt_core::Error> for CliError {
    fn from(e: qgt_core::Error) -> Self {
        match e {
            qgt_core::Error::InvalidArgument(msg) => CliError::Usage(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn load_config(cmd: Command) -> Result<Command, CliError> {
    let path = match &cmd.params().config {
        Some(p) => p.clone(),
        None => return Ok(cmd),
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("reading config {}: {e}", path.display())))?;
    let file: Params = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("parsing config {}: {e}", path.display())))?;
    let merge = |p: Params| p.merged_over(file.clone());
    Ok(match cmd {
        Command::Simulate(p) => Command::Simulate(merge(p)),
        Command::Sweep(p) => Command::Sweep(merge(p)),
        Command::Transition(p) => Command::Transition(merge(p)),
        Command::Bounds(p) => Command::Bounds(merge(p)),
        Command::Verify(p) => Command::Verify(merge(p)),
    })
}

/// Merges the config file, executes, and writes outputs. Nothing is written
/// unless the command succeeded.
pub fn run(cmd: Command) -> Result<(), CliError> {
    let cmd = load_config(cmd)?;
    let out = execute(&cmd)?;
    let p = cmd.params();
    match &p.output {
        Some(path) => output::write_atomic(path, &out.main)?,
        None => std::io::stdout()
            .write_all(&out.main)
            .map_err(|e| CliError::Runtime(format!("stdout: {e}")))?,
    }
    if let (Some(path), Some(svg)) = (&p.plot, &out.plot) {
        output::write_atomic(path, svg.as_bytes())?;
    }
    match out.failure {
        Some(msg) => Err(CliError::Runtime(msg)),
        None => Ok(()),
    }
}

/// Parses `argv` (including the program name), runs, and returns the exit code.
pub fn run_from_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
