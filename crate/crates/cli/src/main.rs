//! `mcaccess`: exact analysis, simulation, oracle checks and sweeps for
//! multi-channel random access scenarios.
//!
//! Exit codes: 0 success, 1 I/O, 2 schema or usage, 3 oracle scope,
//! 4 numerical conditioning or solver failure.

mod render;
mod sweep;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mcaccess::mixed::full_report;
use mcaccess::simulator::{compare, run};
use mcaccess::{oracle, Error, Scenario, SimulationConfig};

#[derive(Parser)]
#[command(
    name = "mcaccess",
    version,
    about = "Steady-state analysis of multi-channel random access"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact normalizer, busy-channel law and per-user metrics.
    Exact {
        scenario: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Simulate the chain and compare against the exact values.
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value_t = 10_000_000)]
        transitions: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve the balance equations directly and audit the product form.
    Verify {
        scenario: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evaluate success probabilities over a grid of values.
    Sweep {
        spec: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Also write CSV to this path.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug)]
pub enum CliError {
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Usage(String),
    Core(Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Usage(_) => 2,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

pub fn core_exit_code(e: &Error) -> u8 {
    match e {
        Error::OracleScope { .. } => 3,
        Error::Conditioning(_) | Error::Solver(_) => 4,
        _ => 2,
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = read_text(path)?;
    Scenario::from_json_str(&text).map_err(|e| match e {
        Error::Schema(msg) => CliError::Core(Error::Schema(format!("{}: {msg}", path.display()))),
        other => CliError::Core(other),
    })
}

/// Prints `csv`, `json` or the table, and writes the CSV file if asked.
fn emit(
    output: &OutputArgs,
    table: String,
    csv: String,
    json: serde_json::Value,
) -> Result<(), CliError> {
    match output.format {
        Format::Table => print!("{table}"),
        Format::Csv => print!("{csv}"),
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&json).expect("json serializes")
        ),
    }
    if let Some(path) = &output.csv {
        write_text(path, &csv)?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Exact { scenario, output } => {
            let scenario = load_scenario(&scenario)?;
            let report = full_report(&scenario)?;
            let json =
                serde_json::json!({ "scenario": scenario.to_json_value(), "report": report });
            emit(
                &output,
                render::exact_table(&report),
                render::exact_csv(&report),
                json,
            )
        }
        Command::Simulate {
            scenario,
            transitions,
            seed,
            output,
        } => {
            if transitions == 0 {
                return Err(CliError::Usage("--transitions must be at least 1".into()));
            }
            let scenario = load_scenario(&scenario)?;
            let exact = full_report(&scenario)?;
            let sim = run(&SimulationConfig {
                scenario: &scenario,
                transitions,
                seed,
            })?;
            let table = compare(&exact, &sim)?;
            let json = serde_json::json!({
                "scenario": scenario.to_json_value(),
                "simulation": sim,
                "comparison": table,
            });
            emit(
                &output,
                render::comparison_table(&sim, &table),
                render::comparison_csv(&table),
                json,
            )
        }
        Command::Verify { scenario, output } => {
            let scenario = load_scenario(&scenario)?;
            let summary = oracle::verify(&scenario)?;
            let json = serde_json::to_value(&summary).expect("json serializes");
            emit(
                &output,
                render::verify_table(&summary),
                render::verify_csv(&summary),
                json,
            )
        }
        Command::Sweep { spec, output } => {
            sweep::execute(&spec, output.format, output.csv.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
