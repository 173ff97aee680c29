use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dirac_thermo::builtin::{Builtin, BUILTIN_NAMES};
use dirac_thermo_cli::config::{resolve_model, ModelSpec};
use dirac_thermo_cli::sweep::{parse_grid, sweep, sweep_exit_code};
use dirac_thermo_cli::{check_builtin, execute, CheckTolerances, CliError, RunConfig, EXIT_CHECK, EXIT_CONFIG};
use serde_json::{Map, Value};

#[derive(Parser)]
#[command(name = "dirac-thermo", version, about = "Simulate simple thermodynamic systems with constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a JSON config.
    Run { config: PathBuf },
    /// Run the verification suite on a built-in model.
    Check {
        model: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON file with model parameters.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Tolerance override, e.g. `--tol dirac=1e-9`.
        #[arg(long = "tol", value_name = "NAME=VALUE")]
        tolerances: Vec<String>,
    },
    /// Run a config once per point of a parameter grid.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        /// Output directory for the runs and `summary.csv`.
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// List the built-in models.
    ListModels,
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn tolerances(overrides: &[String]) -> Result<CheckTolerances, CliError> {
    let mut map = Map::new();
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::config("tol", format!("expected NAME=VALUE, got `{item}`")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| CliError::config(format!("tol.{key}"), "not a number"))?;
        map.insert(key.to_string(), Value::from(value));
    }
    serde_json::from_value(Value::Object(map)).map_err(|e| CliError::config("tol", e.to_string()))
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Run { config } => {
            let config = RunConfig::load(&config)?;
            let outcome = execute(&config)?;
            if let Some(msg) = &outcome.failure {
                eprintln!("solver stopped early: {msg}");
            }
            Ok(outcome.exit_code)
        }
        Command::Check {
            model,
            seed,
            params,
            tolerances: overrides,
        } => {
            let params = match params {
                None => Map::new(),
                Some(path) => serde_json::from_str(&read(&path)?)
                    .map_err(|e| CliError::config("params", e.to_string()))?,
            };
            let builtin = resolve_model(&ModelSpec { name: model, params })?;
            let report = check_builtin(&builtin, seed, &tolerances(&overrides)?)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(if report.overall { 0 } else { EXIT_CHECK })
        }
        Command::Sweep { config, grid, out } => {
            let config = RunConfig::load(&config)?;
            let grid = parse_grid(&read(&grid)?)?;
            let rows = sweep(&config, &grid, &out)?;
            for row in rows.iter().filter(|r| r.exit_code != 0) {
                eprintln!(
                    "{}: exit {} {}",
                    row.dir.display(),
                    row.exit_code,
                    row.message.as_deref().unwrap_or("")
                );
            }
            Ok(sweep_exit_code(&rows))
        }
        Command::ListModels => {
            for name in BUILTIN_NAMES {
                let b = Builtin::from_name(name).expect("listed model");
                println!("{name:<16} {}", b.description());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
