mod config;
mod output;
mod run;

use std::process::ExitCode;

use clap::Parser;

use config::{resolve, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (exp, flags) = cli.command.split();
    let cfg = match resolve(exp, flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run::run_to_destination(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
