mod args;
mod manifest;
mod run;
mod selfcheck;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Separate(a) => run::cmd_separate(a),
        Command::Sweep(a) => run::cmd_sweep(a),
        Command::Selfcheck(a) => selfcheck::cmd_selfcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
