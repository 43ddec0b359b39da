use std::path::{Path, PathBuf};
use std::process::ExitCode;

use arbiter_cli::output::write_artifacts;
use arbiter_cli::{parse_scenario, run_scenario, CliError, Mode};
use clap::Parser;

/// Quantum-game access controller experiments.
#[derive(Parser, Debug)]
#[command(name = "arbiter", version)]
struct Args {
    /// Experiment to run.
    mode: Mode,
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the scenario's `out`, else the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.scenario)
        .map_err(|e| CliError::Validation(format!("cannot read scenario {}: {e}", args.scenario.display())))?;
    let base = args.scenario.parent().unwrap_or(Path::new("."));
    let scenario = parse_scenario(&text, args.mode, base, args.seed)?;
    let outcome = run_scenario(&scenario)?;
    let dir = args.out.clone().or(scenario.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    for path in write_artifacts(&dir, &outcome.artifacts)? {
        println!("wrote {}", path.display());
    }
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
