use std::process::ExitCode;

use clap::Parser;
use inkwarp::cli::{exit_code, run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("inkwarp: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
