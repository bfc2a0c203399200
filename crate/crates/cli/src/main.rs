use std::process::ExitCode;

use langshift_cli::CliError;

fn main() -> ExitCode {
    match langshift_cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) if msg.is_empty() => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("langshift: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
