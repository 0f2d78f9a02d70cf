//! The `sparsewac` command-line front end.
//!
//! Exit codes: 0 success, 2 input error, 3 nothing solved, 4 numerical
//! failure.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;

use clap::Parser;

pub use commands::{
    cmd_analyze, cmd_build_model, cmd_polish, cmd_simulate, cmd_sweep, scenario_from_args, Outcome,
    SweepReportFiles,
};
pub use config::{Cli, Command, Resolved, RunConfig, OUT_DIR_ENV};
pub use report::{fmt_num, pattern_grid, Table};

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NO_SOLUTION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Exit code for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_NUMERICAL
    }
}

/// Executes a resolved command.
pub fn execute(run: &Resolved) -> Result<Outcome> {
    let out = run.out_dir.as_path();
    match &run.command {
        Command::BuildModel { input, cost } => cmd_build_model(out, input, cost),
        Command::Sweep {
            input,
            schedule,
            cost,
            admm,
        } => cmd_sweep(out, input, schedule, cost, admm).map(|(o, _)| o),
        Command::Analyze { input } => cmd_analyze(out, input),
        Command::Simulate { input, sim } => cmd_simulate(out, run.seed, input, sim),
        Command::Polish { input, cost } => cmd_polish(out, input, cost),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = cli.resolve().and_then(|r| execute(&r));
    match result {
        Ok(Outcome::Success(_)) => EXIT_OK,
        Ok(Outcome::NoSolution(_)) => {
            eprintln!("error: no successful solve");
            EXIT_NO_SOLUTION
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
