use std::process::ExitCode;

use clap::Parser;
use vacuum_pairs::cli::{self, Cli, Outcome};

fn main() -> ExitCode {
    let args = Cli::parse();
    match cli::run(&args.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::ComparisonFailed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(2)
        }
    }
}
