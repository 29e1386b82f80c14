//! `fnorm`: command-line front end for fnorm-core.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;

/// Exit status for malformed command lines.
const EXIT_USAGE: u8 = 64;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let name = cli.command.name();
    match commands::run(&cli) {
        Ok(result) => match output::emit(&result, cli.format) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(name, e.into()),
        },
        Err(f) => fail(name, f),
    }
}

fn fail(name: &str, f: output::Failure) -> ExitCode {
    eprintln!("error: {}", f.error);
    output::emit_error(name, &f);
    ExitCode::from(exit_code(&f.error))
}

fn exit_code(e: &fnorm_core::Error) -> u8 {
    if e.is_numeric() {
        2
    } else {
        1
    }
}
