use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod output;
mod svg;

use args::Cli;
use commands::{CliError, EXIT_PASS, EXIT_VERIFY};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = cli.command.args();
    let code = match commands::run(&cli.command) {
        Ok(outcome) => match output::emit(&outcome.text, args.out.as_deref()) {
            Ok(()) if outcome.passed => EXIT_PASS,
            Ok(()) => {
                eprintln!("manhattan {}: verification failed", cli.command.name());
                EXIT_VERIFY
            }
            Err(e) => report(CliError::Io(e)),
        },
        Err(e) => report(e),
    };
    ExitCode::from(code as u8)
}

fn report(e: CliError) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}
