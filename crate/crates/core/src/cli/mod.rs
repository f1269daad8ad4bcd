//! Command-line front end. `run` parses arguments, executes one subcommand
//! inside a thread pool of the requested size and maps failures to exit
//! codes: 0 success, 2 bad input, 3 numerical failure.
//!
//! Every run writes `manifest.json` next to its outputs. The manifest holds
//! the fully resolved command, so `normreg replay manifest.json` repeats the
//! run exactly.

mod args;
mod commands;
mod output;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::{Deserialize, Serialize};

pub use args::{
    BacktestArgs, ClipArgs, Cli, Command, CvmArgs, DesignArgs, FitArgs, MiddleArg, OutputArgs, ReplayArgs, RollArgs,
    ScaleArg, SimulateArgs,
};
pub use commands::{cell_seed, read_yz, ROLLING_HEADER};
pub use output::fmt_f64;

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: Command,
}

impl Command {
    fn output(&self) -> Option<&OutputArgs> {
        match self {
            Command::Fit(a) => Some(&a.output),
            Command::Simulate(a) => Some(&a.output),
            Command::Cvm(a) => Some(&a.output),
            Command::Roll(a) => Some(&a.output),
            Command::Backtest(a) => Some(&a.roll.output),
            Command::Replay(_) => None,
        }
    }

    fn output_mut(&mut self) -> Option<&mut OutputArgs> {
        match self {
            Command::Fit(a) => Some(&mut a.output),
            Command::Simulate(a) => Some(&mut a.output),
            Command::Cvm(a) => Some(&mut a.output),
            Command::Roll(a) => Some(&mut a.output),
            Command::Backtest(a) => Some(&mut a.roll.output),
            Command::Replay(_) => None,
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numeric() {
        EXIT_NUMERIC
    } else {
        EXIT_INPUT
    }
}

/// Parses `argv` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command, writing its outputs and manifest.
pub fn execute(command: Command) -> Result<()> {
    let command = match command {
        Command::Replay(r) => load_replay(&r.manifest, r.out)?,
        other => other,
    };
    let output = command.output().expect("replay resolved above").clone();
    fs::create_dir_all(&output.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(output.threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let out = output.out.as_path();
    pool.install(|| match &command {
        Command::Fit(a) => commands::fit(a, out),
        Command::Simulate(a) => commands::simulate(a, out),
        Command::Cvm(a) => commands::cvm(a, out),
        Command::Roll(a) => commands::roll(a, out),
        Command::Backtest(a) => commands::backtest(a, out),
        Command::Replay(_) => unreachable!(),
    })?;
    write_manifest(out, &command)
}

fn write_manifest(out: &Path, command: &Command) -> Result<()> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: command.clone(),
    };
    output::write_json(&out.join("manifest.json"), &manifest)
}

pub fn load_replay(path: &Path, out: Option<PathBuf>) -> Result<Command> {
    let text = fs::read_to_string(path)?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: format!("manifest: {e}"),
    })?;
    let mut command = manifest.config;
    if let (Some(dir), Some(o)) = (out, command.output_mut()) {
        o.out = dir;
    }
    Ok(command)
}
