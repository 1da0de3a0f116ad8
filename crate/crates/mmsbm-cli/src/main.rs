use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = mmsbm_cli::Cli::parse();
    match mmsbm_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
