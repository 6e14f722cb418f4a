use std::process::ExitCode;

use clap::Parser;
use qdf_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(qdf_cli::run(&cli).code())
}
