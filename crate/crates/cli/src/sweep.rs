//! The `sweep` subcommand: one run per point of a parameter grid.
//!
//! The grid is a JSON object mapping parameter keys to lists of values, e.g.
//! `{"r": [0, 0.1, 1], "gas.T0": [280, 320]}`. Dotted keys address nested
//! parameters. Points are the Cartesian product in key order, the last key
//! varying fastest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::config::{Outputs, RunConfig};
use crate::error::EXIT_SOLVER;
use crate::run::execute;
use crate::CliError;

/// Environment variable capping the number of concurrent runs.
pub const THREADS_ENV: &str = "DIRAC_THERMO_THREADS";

pub type Grid = BTreeMap<String, Vec<Value>>;

pub fn parse_grid(text: &str) -> Result<Grid, CliError> {
    let grid: Grid = serde_json::from_str(text).map_err(CliError::parse)?;
    if grid.is_empty() {
        return Err(CliError::config("grid", "must name at least one parameter"));
    }
    if let Some((key, _)) = grid.iter().find(|(_, values)| values.is_empty()) {
        return Err(CliError::config(format!("grid.{key}"), "must list at least one value"));
    }
    Ok(grid)
}

/// Every combination of grid values, in order.
pub fn grid_points(grid: &Grid) -> Vec<Vec<(String, Value)>> {
    let mut points = vec![Vec::new()];
    for (key, values) in grid {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((key.clone(), v.clone()));
                    p
                })
            })
            .collect();
    }
    points
}

fn set_param(params: &mut Map<String, Value>, key: &str, value: Value) {
    match key.split_once('.') {
        None => {
            params.insert(key.into(), value);
        }
        Some((head, rest)) => {
            let entry = params
                .entry(head.to_string())
                .or_insert_with(|| Value::Object(Map::new()));
            if !entry.is_object() {
                *entry = Value::Object(Map::new());
            }
            if let Value::Object(inner) = entry {
                set_param(inner, rest, value);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: Vec<(String, Value)>,
    pub dir: PathBuf,
    pub final_entropy: Option<f64>,
    pub max_energy_defect: Option<f64>,
    pub exit_code: u8,
    pub message: Option<String>,
}

pub fn run_dir(out: &Path, index: usize) -> PathBuf {
    out.join(format!("run_{index:03}"))
}

fn run_point(base: &RunConfig, point: &[(String, Value)], dir: PathBuf) -> SweepRow {
    let mut config = base.clone();
    for (key, value) in point {
        set_param(&mut config.model.params, key, value.clone());
    }
    config.outputs = Outputs {
        trajectory: dir.join("trajectory.csv"),
        report: dir.join("report.json"),
    };
    let outcome = config.validate().and_then(|_| execute(&config));
    let mut row = SweepRow {
        point: point.to_vec(),
        dir,
        final_entropy: None,
        max_energy_defect: None,
        exit_code: 0,
        message: None,
    };
    match outcome {
        Ok(o) => {
            row.final_entropy = Some(o.report.final_state.entropy);
            row.max_energy_defect = Some(o.report.max_energy_defect);
            row.exit_code = o.exit_code;
            row.message = o.failure;
        }
        Err(e) => {
            row.exit_code = e.exit_code();
            row.message = Some(e.to_string());
        }
    }
    row
}

fn thread_count() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::config(THREADS_ENV, "must be a positive integer")),
        },
    }
}

/// Runs every grid point concurrently and writes `summary.csv` under `out`.
pub fn sweep(base: &RunConfig, grid: &Grid, out: &Path) -> Result<Vec<SweepRow>, CliError> {
    let points = grid_points(grid);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(i, p)| run_point(base, p, run_dir(out, i)))
            .collect()
    });
    write_summary(grid, &rows, &out.join("summary.csv"))?;
    Ok(rows)
}

fn cell(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn write_summary(grid: &Grid, rows: &[SweepRow], path: &Path) -> Result<(), CliError> {
    let mut text = String::new();
    let mut header: Vec<String> = grid.keys().cloned().collect();
    header.extend(["final_S", "max_energy_defect", "exit"].map(String::from));
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        let mut cells: Vec<String> = row.point.iter().map(|(_, v)| cell(v)).collect();
        cells.push(row.final_entropy.map(|s| format!("{s:.16e}")).unwrap_or_default());
        cells.push(row.max_energy_defect.map(|s| format!("{s:.16e}")).unwrap_or_default());
        cells.push(row.exit_code.to_string());
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    std::fs::create_dir_all(path.parent().unwrap_or(Path::new(".")))
        .map_err(|e| CliError::io(e, path))?;
    std::fs::write(path, text).map_err(|e| CliError::io(e, path))
}

/// Exit status of a finished sweep: nonzero if any run failed.
pub fn sweep_exit_code(rows: &[SweepRow]) -> u8 {
    if rows.iter().all(|r| r.exit_code == 0) {
        0
    } else {
        EXIT_SOLVER
    }
}
