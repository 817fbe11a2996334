use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rodsim::presets::PRESETS;
use rodsim::{execute, prepare, RunError, RunStatus, Scenario, ScenarioError};

/// Isogeometric Kirchhoff rod simulator.
#[derive(Parser)]
#[command(name = "rodsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write CSV and JSON outputs.
    Run {
        scenario: PathBuf,
        /// Replace one scenario key, `key=value`; may be repeated.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory, replacing `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in presets.
    ListPresets,
    /// Check a scenario file and print its canonical form.
    Validate {
        scenario: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_SOLVER: u8 = 3;

fn load(path: &PathBuf, overrides: &[String]) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })?;
    Scenario::parse_with_overrides(&text, overrides)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::ListPresets => {
            for p in PRESETS {
                println!("{:<22} {}", p.name, p.description);
            }
            ExitCode::SUCCESS
        }
        Command::Validate { scenario, overrides } => match load(&scenario, &overrides).and_then(|s| prepare(&s).map(|_| s)) {
            Ok(s) => {
                print!("{}", s.to_text());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_VALIDATION)
            }
        },
        Command::Run { scenario, overrides, out } => {
            let (s, plan) = match load(&scenario, &overrides).and_then(|s| prepare(&s).map(|p| (s, p))) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_VALIDATION);
                }
            };
            let dir = out.unwrap_or_else(|| PathBuf::from(&s.output.dir));
            match execute(&s, &plan, &dir) {
                Ok(report) => {
                    for f in &report.files {
                        println!("wrote {}", f.display());
                    }
                    match report.status {
                        RunStatus::Completed => ExitCode::SUCCESS,
                        RunStatus::SolverFailure { message, .. } => {
                            eprintln!("solver failure: {message}");
                            ExitCode::from(EXIT_SOLVER)
                        }
                    }
                }
                Err(RunError::Invalid(e)) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_VALIDATION)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
