use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use uncertain_spatial::cli::{error_json, execute, exit_code, RunConfig};

fn main() -> ExitCode {
    let cfg = match RunConfig::try_parse() {
        Ok(cfg) => cfg,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => {
            let message = e.to_string();
            eprintln!(
                "{}",
                error_json(message.lines().next().unwrap_or("invalid arguments"))
            );
            return ExitCode::from(1);
        }
    };
    match execute(cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e.to_string()));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
