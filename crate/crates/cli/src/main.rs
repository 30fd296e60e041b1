use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use soundprofile_cli::args::Cli;
use soundprofile_cli::error::{EXIT_INTERNAL, EXIT_OK, EXIT_USAGE};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match std::panic::catch_unwind(|| soundprofile_cli::run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        // the panic message has already been printed by the hook
        Err(_) => ExitCode::from(EXIT_INTERNAL as u8),
    }
}
