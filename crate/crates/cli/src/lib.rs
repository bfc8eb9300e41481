//! Command-line front end for `diagdesign`: argument parsing, report
//! formats (CSV and JSON) and thread-count independent parallel drivers.

pub mod commands;
pub mod config;
pub mod error;
pub mod parallel;
pub mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};

use clap::Parser;

use crate::config::{Cli, RunConfig};
use crate::error::{exit, CliResult};
use crate::report::{Report, Status};

/// Build the report for a parsed command line on a pool of the requested size.
pub fn execute(cli: &Cli) -> CliResult<Report> {
    let config = RunConfig::from_cli(cli);
    parallel::with_threads(cli.output.threads, || commands::run(&config))?
}

/// Parse, run, write; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::SUCCESS };
        }
    };
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let written = match &cli.output.out {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            report.write(cli.output.format, &mut w)?;
            w.flush()
        }),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            report.write(cli.output.format, &mut lock).and_then(|_| lock.flush())
        }
    };
    if let Err(e) = written {
        eprintln!("error: i/o: {e}");
        return exit::CHECK_FAILED;
    }
    match report.status {
        Status::Pass | Status::Diagnostic => exit::SUCCESS,
        Status::Fail => {
            eprintln!("error: one or more checks failed");
            exit::CHECK_FAILED
        }
    }
}
