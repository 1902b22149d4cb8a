use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use paqft::cli::{run, thread_pool_from_env, Command};
use paqft::config::RunConfig;

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    Propagators,
    Axioms,
    ExtractZ,
    Correlate,
}

/// Lattice pAQFT checks: propagators, axiom suites, Z extraction, correlations.
#[derive(Parser)]
#[command(name = "paqft", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override a config field, e.g. `--set lattice.nt=16`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cmd = match args.command {
        Cmd::Propagators => Command::Propagators,
        Cmd::Axioms => Command::Axioms,
        Cmd::ExtractZ => Command::ExtractZ,
        Cmd::Correlate => Command::Correlate,
    };
    let result = std::fs::read_to_string(&args.config)
        .map_err(paqft::Error::from)
        .and_then(|text| RunConfig::from_json_with_overrides(&text, &args.overrides))
        .and_then(|cfg| thread_pool_from_env()?.install(|| run(cmd, &cfg)));
    match result {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
