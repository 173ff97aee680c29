//! Run configuration, read from a JSON document.
//!
//! ```json
//! {
//!   "model": { "name": "lcr", "params": { "R": 2.0 } },
//!   "initial": { "q": [0, 0.01, 0, 0], "v": [0.2, -0.05, 0.2, 0.25], "S": 0 },
//!   "t_span": [0.0, 1.0],
//!   "dt": 0.001,
//!   "scheme": "rk4",
//!   "projection": true,
//!   "tolerances": { "dirac": 1e-6 },
//!   "outputs": { "trajectory": "lcr.csv", "report": "lcr.json" },
//!   "seed": 0
//! }
//! ```
//!
//! Only `model.name`, `t_span`, `dt` and `outputs` are required. A missing
//! `initial` selects the model's default state.

use std::path::{Path, PathBuf};

use dirac_thermo::builtin::{
    Builtin, LcrParams, OpenPistonParams, PistonCylinderParams, BUILTIN_NAMES,
};
use dirac_thermo::{Phase, Scheme, SimOptions, Tolerances};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    #[serde(default)]
    pub params: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub q: Vec<f64>,
    pub v: Vec<f64>,
    #[serde(rename = "S")]
    pub entropy: f64,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub moles: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub trajectory: PathBuf,
    pub report: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
    pub t_span: [f64; 2],
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_projection")]
    pub projection: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub outputs: Outputs,
    #[serde(default)]
    pub seed: u64,
}

fn default_projection() -> bool {
    true
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = serde_json::from_str(text).map_err(CliError::parse)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let [t0, t1] = self.t_span;
        if !t0.is_finite() || !t1.is_finite() || !(t1 > t0) {
            return Err(CliError::config("t_span", "must be finite with t1 > t0"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(CliError::config("dt", "must be a positive finite number"));
        }
        if self.dt > t1 - t0 {
            return Err(CliError::config("dt", "must not exceed t1 - t0"));
        }
        for (key, value) in [
            ("tolerances.constraint", self.tolerances.constraint),
            ("tolerances.dirac", self.tolerances.dirac),
            ("tolerances.newton", self.tolerances.newton),
        ] {
            if !(value > 0.0) {
                return Err(CliError::config(key, "must be positive"));
            }
        }
        let builtin = self.builtin()?;
        builtin.build().map_err(CliError::model)?;
        self.initial_state(&builtin)?;
        Ok(())
    }

    pub fn builtin(&self) -> Result<Builtin, CliError> {
        resolve_model(&self.model)
    }

    pub fn options(&self) -> SimOptions {
        SimOptions {
            scheme: self.scheme,
            projection: self.projection,
            tolerances: self.tolerances,
            ..SimOptions::default()
        }
    }

    pub fn initial_state(&self, builtin: &Builtin) -> Result<Phase, CliError> {
        let default = builtin.default_initial();
        let Some(init) = &self.initial else {
            return Ok(default);
        };
        let n = default.dof();
        if init.q.len() != n {
            return Err(CliError::config("initial.q", format!("expected {n} entries")));
        }
        if init.v.len() != n {
            return Err(CliError::config("initial.v", format!("expected {n} entries")));
        }
        if init.moles.is_some() && !builtin.is_open() {
            return Err(CliError::config("initial.N", "only open models carry a mole number"));
        }
        let moles = init.moles.unwrap_or(default.moles);
        Ok(Phase::new(
            DVector::from_vec(init.q.clone()),
            DVector::from_vec(init.v.clone()),
            init.entropy,
        )
        .with_moles(moles))
    }
}

/// Builds the named model from its parameter map; unknown keys are errors.
pub fn resolve_model(spec: &ModelSpec) -> Result<Builtin, CliError> {
    let params = Value::Object(spec.params.clone());
    let parsed = match spec.name.as_str() {
        "piston_cylinder" => serde_json::from_value::<PistonCylinderParams>(params)
            .map(Builtin::PistonCylinder),
        "lcr" => serde_json::from_value::<LcrParams>(params).map(Builtin::Lcr),
        "open_piston" => {
            serde_json::from_value::<OpenPistonParams>(params).map(Builtin::OpenPiston)
        }
        other => {
            return Err(CliError::config(
                "model.name",
                format!("unknown model `{other}` (expected one of {})", BUILTIN_NAMES.join(", ")),
            ))
        }
    };
    parsed.map_err(|e| CliError::config("model.params", e.to_string()))
}
