use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use quasipure_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(output) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(output.stdout.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(quasipure_cli::EXIT_VERIFICATION_FAILED);
            }
            ExitCode::from(output.status)
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.status)
        }
    }
}
