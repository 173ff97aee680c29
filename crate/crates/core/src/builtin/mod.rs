//! Built-in models: the slider-crank piston-cylinder, the LCR circuit, and
//! the open piston with heat and matter exchange.

mod gas;
mod lcr;
mod piston;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Phase, ThermoModel};
use crate::open::OpenModel;

pub use gas::{IdealGas, GAS_CONSTANT};
pub use lcr::{build_lcr, Lcr, LcrParams, LCR_KCL};
pub use piston::{
    build_open_piston, build_piston, build_piston_cylinder, piston_alpha, piston_alpha_prime,
    piston_position, OpenPistonParams, Piston, PistonCylinder, PistonCylinderParams, PistonParams,
    PortParams, SourceParams,
};

pub(crate) fn positive(key: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::param(key, "must be positive"))
    }
}

pub(crate) fn nonnegative(key: &str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::param(key, "must be nonnegative"))
    }
}

/// A scalar function of time: a constant or `offset + amplitude sin(ωt + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Signal {
    Constant(f64),
    Sine {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
}

impl Default for Signal {
    fn default() -> Self {
        Signal::Constant(0.0)
    }
}

impl Signal {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Signal::Constant(c) => c,
            Signal::Sine {
                amplitude,
                omega,
                phase,
                offset,
            } => offset + amplitude * (omega * t + phase).sin(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Signal::Constant(_) => 0.0,
            Signal::Sine {
                amplitude,
                omega,
                phase,
                ..
            } => amplitude * omega * (omega * t + phase).cos(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Signal::Constant(c) => c == 0.0,
            Signal::Sine {
                amplitude, offset, ..
            } => amplitude == 0.0 && offset == 0.0,
        }
    }

    pub(crate) fn validate(&self, key: &str) -> Result<()> {
        let finite = match *self {
            Signal::Constant(c) => c.is_finite(),
            Signal::Sine {
                amplitude,
                omega,
                phase,
                offset,
            } => [amplitude, omega, phase, offset].iter().all(|v| v.is_finite()),
        };
        if finite {
            Ok(())
        } else {
            Err(Error::param(key, "must be finite"))
        }
    }
}

/// Names accepted by [`Builtin::from_name`].
pub const BUILTIN_NAMES: [&str; 3] = ["piston_cylinder", "lcr", "open_piston"];

/// A built-in model with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    PistonCylinder(PistonCylinderParams),
    Lcr(LcrParams),
    OpenPiston(OpenPistonParams),
}

/// A constructed built-in model.
pub enum BuiltModel {
    Closed(Box<dyn ThermoModel>),
    Open(OpenModel),
}

impl BuiltModel {
    /// The mechanical model; for open systems the model the ports attach to.
    pub fn base(&self) -> &dyn ThermoModel {
        match self {
            BuiltModel::Closed(m) => m.as_ref(),
            BuiltModel::Open(m) => m.base(),
        }
    }

    pub fn as_open(&self) -> Option<&OpenModel> {
        match self {
            BuiltModel::Open(m) => Some(m),
            BuiltModel::Closed(_) => None,
        }
    }
}

impl Builtin {
    /// The named model with default parameters.
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "piston_cylinder" => Some(Builtin::PistonCylinder(Default::default())),
            "lcr" => Some(Builtin::Lcr(Default::default())),
            "open_piston" => Some(Builtin::OpenPiston(Default::default())),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::PistonCylinder(_) => "piston_cylinder",
            Builtin::Lcr(_) => "lcr",
            Builtin::OpenPiston(_) => "open_piston",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Builtin::PistonCylinder(_) => {
                "slider-crank piston with ideal gas, coordinates (q, phi), one constraint"
            }
            Builtin::Lcr(_) => "LCR circuit, coordinates (q_L, q_C, q_V, q_R), two KCL constraints",
            Builtin::OpenPiston(_) => "piston with matter ports and heat sources, coordinate q",
        }
    }

    pub fn is_open(&self) -> bool {
        matches!(self, Builtin::OpenPiston(_))
    }

    pub fn build(&self) -> Result<BuiltModel> {
        Ok(match self {
            Builtin::PistonCylinder(p) => BuiltModel::Closed(Box::new(build_piston_cylinder(p)?)),
            Builtin::Lcr(p) => BuiltModel::Closed(Box::new(build_lcr(p)?)),
            Builtin::OpenPiston(p) => BuiltModel::Open(build_open_piston(p)?),
        })
    }

    pub fn default_initial(&self) -> Phase {
        match self {
            Builtin::PistonCylinder(p) => p.default_initial(),
            Builtin::Lcr(p) => p.default_initial(),
            Builtin::OpenPiston(p) => p.default_initial(),
        }
    }

    pub fn random_admissible_state(&self, rng: &mut impl Rng) -> Phase {
        match self {
            Builtin::PistonCylinder(p) => p.random_admissible_state(rng),
            Builtin::Lcr(p) => p.random_admissible_state(rng),
            Builtin::OpenPiston(p) => p.random_admissible_state(rng),
        }
    }
}
