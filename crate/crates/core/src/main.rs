use std::io;
use std::process::ExitCode;

use clap::Parser;
use fplab::cli::{run, RunConfig};

fn main() -> ExitCode {
    let config = RunConfig::parse();
    let stdout = io::stdout();
    match run(&config, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("fplab: error: {err}");
            ExitCode::FAILURE
        }
    }
}
