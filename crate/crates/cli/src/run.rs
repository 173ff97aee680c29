//! The `run` subcommand: one simulation, a CSV trajectory and a JSON report.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use dirac_thermo::dynamics::{energy_balance_report, write_csv};
use dirac_thermo::{open_simulate, simulate, Error, Trajectory};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::EXIT_SOLVER;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalState {
    pub t: f64,
    pub q: Vec<f64>,
    pub v: Vec<f64>,
    #[serde(rename = "S")]
    pub entropy: f64,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub moles: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub final_state: FinalState,
    pub max_energy_defect: f64,
    pub min_entropy_increment: f64,
    pub max_dirac_residual: f64,
    pub max_constraint_residual: f64,
}

impl RunReport {
    pub fn from_trajectory(trajectory: &Trajectory) -> Self {
        let last = trajectory.last();
        let min_entropy_increment = if trajectory.samples.len() < 2 {
            0.0
        } else {
            trajectory.min_entropy_increment()
        };
        RunReport {
            final_state: FinalState {
                t: last.t,
                q: last.point.q.iter().copied().collect(),
                v: last.point.v.iter().copied().collect(),
                entropy: last.point.entropy,
                moles: trajectory.is_open().then_some(last.point.moles),
            },
            max_energy_defect: energy_balance_report(trajectory).max_defect,
            min_entropy_increment,
            max_dirac_residual: trajectory.max_dirac_residual(),
            max_constraint_residual: trajectory.max_constraint_residual(),
        }
    }
}

/// Runs the configured simulation without writing anything.
pub fn simulate_config(config: &RunConfig) -> Result<Trajectory, CliError> {
    let builtin = config.builtin()?;
    let built = builtin.build().map_err(CliError::model)?;
    let x0 = config.initial_state(&builtin)?;
    let span = (config.t_span[0], config.t_span[1]);
    let options = config.options();
    let result = match built.as_open() {
        Some(open) => open_simulate(open, &x0, span, config.dt, &options),
        None => simulate(built.base(), &x0, span, config.dt, &options),
    };
    result.map_err(|e| match e {
        Error::InconsistentInitialState { .. } => CliError::config("initial.v", e.to_string()),
        Error::InvalidParameter { ref key, .. } => CliError::config(key.clone(), e.to_string()),
        Error::Dimension { .. } => CliError::config("initial", e.to_string()),
        other => CliError::Solver(other),
    })
}

pub fn write_trajectory(trajectory: &Trajectory, path: &Path) -> Result<(), CliError> {
    create_parent(path)?;
    let file = File::create(path).map_err(|e| CliError::io(e, path))?;
    let mut out = BufWriter::new(file);
    write_csv(trajectory, &mut out).map_err(|e| CliError::io(e, path))?;
    out.flush().map_err(|e| CliError::io(e, path))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    create_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(e, path))
}

fn create_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(e, dir))
        }
        _ => Ok(()),
    }
}

/// Result of [`execute`]: the report and the process exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub report: RunReport,
    pub exit_code: u8,
    /// Why the run stopped early, if it did.
    pub failure: Option<String>,
}

/// Simulates and writes both output files. A run that stops early still
/// writes the partial trajectory and exits with [`EXIT_SOLVER`].
pub fn execute(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let trajectory = simulate_config(config)?;
    write_trajectory(&trajectory, &config.outputs.trajectory)?;
    let report = RunReport::from_trajectory(&trajectory);
    write_json(&report, &config.outputs.report)?;
    let failure = trajectory
        .failure
        .as_ref()
        .map(|f| format!("stopped at t = {}: {}", f.t, f.error));
    Ok(RunOutcome {
        report,
        exit_code: if failure.is_some() { EXIT_SOLVER } else { 0 },
        failure,
    })
}
