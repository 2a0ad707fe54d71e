//! `dn2n` — reproducible experiment pipeline for self-supervised denoising
//! of denatured frame sequences.
//!
//! Subcommands: synth, train, denoise, eval, report, diagnose.
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.

mod args;
mod commands;
mod config;

use dn2n_core::CoreError;

pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError { code: 3, message: message.into() }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::InvalidArgument(_) => 2,
            CoreError::NumericFailure(_) => 4,
            _ => 3,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError { code: 3, message: e.to_string() }
    }
}

const USAGE: &str = "usage: dn2n <command> [flags]

commands:
  synth     --mode slow|fast --lambda R --sigma R --out DIR
            [--size N] [--frames N] [--seed N] [--threads N]
  train     --data DIR --out MODEL [--config FILE] [--method dn2n|td]
            [--static-transforms] [--epochs N] [--seed N] [--sigma-tilde R]
            [--mu R] [--l N] [--k N] [--lr R] [--batch N] [--levels A,B,..]
            [--threads N] [--stamp] [--quiet]
  denoise   --model FILE --data DIR --out FRAME
            [--k N] [--sigma-tilde R] [--seed N] [--threads N]
  eval      --pred FRAME --ref FRAME [--data-range R]
            [--pred-domain unit|raw255] [--ref-domain unit|raw255]
            [--out FILE] [--meta KEY=VALUE]...
  report    --runs DIR [DIR...]
  diagnose  --model FILE --clean DIR --noisy DIR [--out FILE]
            [--k N] [--sigma-tilde R] [--seed N] [--threads N]
";

fn run() -> Result<(), CliError> {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let Some(command) = argv.first() else {
        return Err(CliError::usage(USAGE));
    };
    let rest = &argv[1..];
    match command.as_str() {
        "synth" => commands::synth::run(rest),
        "train" => commands::train::run(rest),
        "denoise" => commands::denoise::run(rest),
        "eval" => commands::eval::run(rest),
        "report" => commands::report::run(rest),
        "diagnose" => commands::diagnose::run(rest),
        "help" | "--help" | "-h" => {
            print!("{USAGE}");
            Ok(())
        }
        other => Err(CliError::usage(format!("unknown command {other:?}\n\n{USAGE}"))),
    }
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {}", e.message);
            std::process::exit(e.code);
        }
    }
}
