use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = jamlab::cli::Cli::parse();
    match jamlab::cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
