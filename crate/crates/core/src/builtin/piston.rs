use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gas::IdealGas;
use super::{positive, nonnegative, Signal};
use crate::error::{Error, Result};
use crate::model::{Phase, ThermoModel};
use crate::open::{HeatSource, LinearHeatSource, LinearPort, OpenModel, Port};

/// `α(φ) = a sin φ (1 + (a/b) cos φ / √(1 − (a/b)² sin² φ))`.
pub fn piston_alpha(phi: f64, a: f64, b: f64) -> f64 {
    let k = a / b;
    let (s, c) = phi.sin_cos();
    a * s * (1.0 + k * c / (1.0 - k * k * s * s).sqrt())
}

/// `dα/dφ`.
pub fn piston_alpha_prime(phi: f64, a: f64, b: f64) -> f64 {
    let k = a / b;
    let (s, c) = phi.sin_cos();
    let root = (1.0 - k * k * s * s).sqrt();
    a * c + a * k * ((c * c - s * s) / root + k * k * s * s * c * c / (root * root * root))
}

/// Piston position compatible with crank angle `φ`:
/// `q = a cos φ + b √(1 − (a/b)² sin² φ)`, whose differential is `−α(φ) dφ`.
pub fn piston_position(phi: f64, a: f64, b: f64) -> f64 {
    let k = a / b;
    let s = phi.sin();
    a * phi.cos() + b * (1.0 - k * k * s * s).sqrt()
}

fn default_gas() -> IdealGas {
    IdealGas {
        n0: 1e-3,
        s0: 0.0,
        v0: 2.8e-3,
        t0: 300.0,
    }
}

/// Piston of mass `M` driven through links `a < b` by a shaft of mass `m`;
/// an ideal gas fills the cylinder volume `A q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PistonCylinderParams {
    #[serde(rename = "M")]
    pub piston_mass: f64,
    #[serde(rename = "m")]
    pub shaft_mass: f64,
    pub a: f64,
    pub b: f64,
    #[serde(rename = "A")]
    pub area: f64,
    pub r: f64,
    pub g: f64,
    #[serde(rename = "T_ext")]
    pub torque: Signal,
    pub gas: IdealGas,
}

impl Default for PistonCylinderParams {
    fn default() -> Self {
        Self {
            piston_mass: 1.0,
            shaft_mass: 1.0,
            a: 0.1,
            b: 0.3,
            area: 0.01,
            r: 0.5,
            g: 9.81,
            torque: Signal::Constant(0.0),
            gas: default_gas(),
        }
    }
}

impl PistonCylinderParams {
    pub fn validate(&self) -> Result<()> {
        positive("M", self.piston_mass)?;
        positive("m", self.shaft_mass)?;
        positive("a", self.a)?;
        positive("b", self.b)?;
        if !(self.b > self.a) {
            return Err(Error::param("b", "must satisfy b > a"));
        }
        positive("A", self.area)?;
        nonnegative("r", self.r)?;
        if !self.g.is_finite() {
            return Err(Error::param("g", "must be finite"));
        }
        self.torque.validate("T_ext")?;
        self.gas.validate("gas.")
    }

    /// State at rest with crank angle `π/2` and the gas at `T₀`.
    pub fn default_initial(&self) -> Phase {
        let phi = std::f64::consts::FRAC_PI_2;
        let q = piston_position(phi, self.a, self.b);
        let s = self.gas.entropy_at(self.area * q, self.gas.n0, self.gas.t0);
        Phase::new(DVector::from_vec(vec![q, phi]), DVector::zeros(2), s).with_moles(self.gas.n0)
    }

    /// Kinematically compatible state with random angle, speed and temperature.
    pub fn random_admissible_state(&self, rng: &mut impl Rng) -> Phase {
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let q = piston_position(phi, self.a, self.b);
        let v_phi = rng.gen_range(-3.0..3.0);
        let v_q = -piston_alpha(phi, self.a, self.b) * v_phi;
        let temperature = rng.gen_range(200.0..400.0);
        let s = self.gas.entropy_at(self.area * q, self.gas.n0, temperature);
        Phase::new(DVector::from_vec(vec![q, phi]), DVector::from_vec(vec![v_q, v_phi]), s)
            .with_moles(self.gas.n0)
            .at_time(rng.gen_range(0.0..1.0))
    }
}

/// Coordinates `(q, φ)`, one constraint `dq + α(φ) dφ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PistonCylinder {
    params: PistonCylinderParams,
}

pub fn build_piston_cylinder(params: &PistonCylinderParams) -> Result<PistonCylinder> {
    params.validate()?;
    Ok(PistonCylinder {
        params: params.clone(),
    })
}

impl PistonCylinder {
    pub fn params(&self) -> &PistonCylinderParams {
        &self.params
    }

    fn volume(&self, x: &Phase) -> f64 {
        self.params.area * x.q[0]
    }

    /// Gas pressure `𝗉`.
    pub fn pressure(&self, x: &Phase) -> f64 {
        self.params
            .gas
            .pressure(self.volume(x), x.entropy, self.params.gas.n0)
    }

    /// Gas part of the internal energy.
    pub fn gas_energy(&self, x: &Phase) -> f64 {
        self.params
            .gas
            .energy(self.volume(x), x.entropy, self.params.gas.n0)
    }
}

impl ThermoModel for PistonCylinder {
    fn dof(&self) -> usize {
        2
    }

    fn constraint_count(&self) -> usize {
        1
    }

    fn lagrangian(&self, x: &Phase) -> f64 {
        let p = &self.params;
        let (vq, vphi) = (x.v[0], x.v[1]);
        0.5 * p.piston_mass * vq * vq + 0.5 * p.shaft_mass * p.a * p.a * vphi * vphi
            - self.gas_energy(x)
            - p.shaft_mass * p.g * p.a * x.q[1].sin()
    }

    fn dl_dq(&self, x: &Phase) -> DVector<f64> {
        let p = &self.params;
        DVector::from_vec(vec![
            self.pressure(x) * p.area,
            -p.shaft_mass * p.g * p.a * x.q[1].cos(),
        ])
    }

    fn dl_dv(&self, x: &Phase) -> DVector<f64> {
        let p = &self.params;
        DVector::from_vec(vec![
            p.piston_mass * x.v[0],
            p.shaft_mass * p.a * p.a * x.v[1],
        ])
    }

    fn dl_ds(&self, x: &Phase) -> f64 {
        -self
            .params
            .gas
            .temperature(self.volume(x), x.entropy, self.params.gas.n0)
    }

    fn mass_matrix(&self, _x: &Phase) -> DMatrix<f64> {
        let p = &self.params;
        DMatrix::from_diagonal(&DVector::from_vec(vec![
            p.piston_mass,
            p.shaft_mass * p.a * p.a,
        ]))
    }

    fn friction(&self, x: &Phase) -> DVector<f64> {
        DVector::from_vec(vec![-self.params.r * x.v[0], 0.0])
    }

    fn external_force(&self, x: &Phase) -> DVector<f64> {
        DVector::from_vec(vec![0.0, self.params.torque.value(x.t)])
    }

    fn constraint_forms(&self, x: &Phase) -> DMatrix<f64> {
        let p = &self.params;
        DMatrix::from_row_slice(1, 2, &[1.0, piston_alpha(x.q[1], p.a, p.b)])
    }

    fn constraint_rate(&self, x: &Phase) -> DMatrix<f64> {
        let p = &self.params;
        DMatrix::from_row_slice(1, 2, &[0.0, piston_alpha_prime(x.q[1], p.a, p.b) * x.v[1]])
    }

    fn momentum_q_jacobian(&self, _x: &Phase) -> DMatrix<f64> {
        DMatrix::zeros(2, 2)
    }

    fn momentum_s_derivative(&self, _x: &Phase) -> DVector<f64> {
        DVector::zeros(2)
    }

    fn momentum_n_derivative(&self, _x: &Phase) -> DVector<f64> {
        DVector::zeros(2)
    }

    fn momentum_t_derivative(&self, _x: &Phase) -> DVector<f64> {
        DVector::zeros(2)
    }

    fn dl_dt(&self, _x: &Phase) -> f64 {
        0.0
    }
}

/// Single piston of mass `M` closing a gas volume `A q`, pushed by an external
/// force. The mole number is read from the state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PistonParams {
    #[serde(rename = "M")]
    pub mass: f64,
    #[serde(rename = "A")]
    pub area: f64,
    pub r: f64,
    #[serde(rename = "F_ext")]
    pub force: Signal,
    pub gas: IdealGas,
}

impl Default for PistonParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            area: 0.01,
            r: 0.5,
            force: Signal::Constant(-4.0),
            gas: IdealGas {
                v0: 5e-3,
                ..default_gas()
            },
        }
    }
}

impl PistonParams {
    pub fn validate(&self) -> Result<()> {
        positive("M", self.mass)?;
        positive("A", self.area)?;
        nonnegative("r", self.r)?;
        self.force.validate("F_ext")?;
        self.gas.validate("gas.")
    }

    /// At rest at `V = V₀`, `N = N₀`, `T = T₀`.
    pub fn default_initial(&self) -> Phase {
        let q = self.gas.v0 / self.area;
        let s = self.gas.entropy_at(self.gas.v0, self.gas.n0, self.gas.t0);
        Phase::new(DVector::from_element(1, q), DVector::zeros(1), s).with_moles(self.gas.n0)
    }

    pub fn random_admissible_state(&self, rng: &mut impl Rng) -> Phase {
        let q0 = self.gas.v0 / self.area;
        let q = q0 * rng.gen_range(0.6..1.4);
        let n = self.gas.n0 * rng.gen_range(0.8..1.2);
        let temperature = rng.gen_range(200.0..400.0);
        let s = self.gas.entropy_at(self.area * q, n, temperature);
        Phase::new(
            DVector::from_element(1, q),
            DVector::from_element(1, rng.gen_range(-1.0..1.0)),
            s,
        )
        .with_moles(n)
        .at_time(rng.gen_range(0.0..1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piston {
    params: PistonParams,
}

pub fn build_piston(params: &PistonParams) -> Result<Piston> {
    params.validate()?;
    Ok(Piston {
        params: params.clone(),
    })
}

impl Piston {
    pub fn params(&self) -> &PistonParams {
        &self.params
    }

    fn volume(&self, x: &Phase) -> f64 {
        self.params.area * x.q[0]
    }

    pub fn pressure(&self, x: &Phase) -> f64 {
        self.params.gas.pressure(self.volume(x), x.entropy, x.moles)
    }
}

impl ThermoModel for Piston {
    fn dof(&self) -> usize {
        1
    }

    fn lagrangian(&self, x: &Phase) -> f64 {
        0.5 * self.params.mass * x.v[0] * x.v[0]
            - self.params.gas.energy(self.volume(x), x.entropy, x.moles)
    }

    fn dl_dq(&self, x: &Phase) -> DVector<f64> {
        DVector::from_element(1, self.pressure(x) * self.params.area)
    }

    fn dl_dv(&self, x: &Phase) -> DVector<f64> {
        DVector::from_element(1, self.params.mass * x.v[0])
    }

    fn dl_ds(&self, x: &Phase) -> f64 {
        -self.params.gas.temperature(self.volume(x), x.entropy, x.moles)
    }

    fn dl_dn(&self, x: &Phase) -> f64 {
        -self.params.gas.du_dn(self.volume(x), x.entropy, x.moles)
    }

    fn mass_matrix(&self, _x: &Phase) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, self.params.mass)
    }

    fn friction(&self, x: &Phase) -> DVector<f64> {
        DVector::from_element(1, -self.params.r * x.v[0])
    }

    fn external_force(&self, x: &Phase) -> DVector<f64> {
        DVector::from_element(1, self.params.force.value(x.t))
    }

    fn momentum_q_jacobian(&self, _x: &Phase) -> DMatrix<f64> {
        DMatrix::zeros(1, 1)
    }

    fn momentum_s_derivative(&self, _x: &Phase) -> DVector<f64> {
        DVector::zeros(1)
    }

    fn momentum_n_derivative(&self, _x: &Phase) -> DVector<f64> {
        DVector::zeros(1)
    }

    fn momentum_t_derivative(&self, _x: &Phase) -> DVector<f64> {
        DVector::zeros(1)
    }

    fn dl_dt(&self, _x: &Phase) -> f64 {
        0.0
    }
}

/// Matter port with linear flux laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortParams {
    /// Chemical potential `μᵃ`.
    pub mu: f64,
    /// Temperature `Tᵃ`.
    #[serde(rename = "T")]
    pub temperature: f64,
    /// Matter conductance `λ`.
    #[serde(default)]
    pub lambda: f64,
    /// Entropy conductance `σ`.
    #[serde(default)]
    pub sigma: f64,
}

/// Heat source with a linear flux law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    #[serde(rename = "T")]
    pub temperature: f64,
    #[serde(default)]
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpenPistonParams {
    #[serde(rename = "M")]
    pub mass: f64,
    #[serde(rename = "A")]
    pub area: f64,
    pub r: f64,
    #[serde(rename = "F_ext")]
    pub force: Signal,
    pub gas: IdealGas,
    pub ports: Vec<PortParams>,
    pub sources: Vec<SourceParams>,
}

impl Default for OpenPistonParams {
    fn default() -> Self {
        let piston = PistonParams::default();
        Self {
            mass: piston.mass,
            area: piston.area,
            r: piston.r,
            force: piston.force,
            gas: piston.gas,
            ports: vec![PortParams {
                mu: 6500.0,
                temperature: 350.0,
                lambda: 1e-8,
                sigma: 1e-5,
            }],
            sources: vec![SourceParams {
                temperature: 400.0,
                kappa: 1e-5,
            }],
        }
    }
}

impl OpenPistonParams {
    /// The mechanical part as a closed piston.
    pub fn piston(&self) -> PistonParams {
        PistonParams {
            mass: self.mass,
            area: self.area,
            r: self.r,
            force: self.force.clone(),
            gas: self.gas,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.piston().validate()?;
        for (i, port) in self.ports.iter().enumerate() {
            if !port.mu.is_finite() {
                return Err(Error::param(format!("ports[{i}].mu"), "must be finite"));
            }
            positive(&format!("ports[{i}].T"), port.temperature)?;
            nonnegative(&format!("ports[{i}].lambda"), port.lambda)?;
            nonnegative(&format!("ports[{i}].sigma"), port.sigma)?;
        }
        for (i, source) in self.sources.iter().enumerate() {
            positive(&format!("sources[{i}].T"), source.temperature)?;
            nonnegative(&format!("sources[{i}].kappa"), source.kappa)?;
        }
        Ok(())
    }

    pub fn default_initial(&self) -> Phase {
        self.piston().default_initial()
    }

    pub fn random_admissible_state(&self, rng: &mut impl Rng) -> Phase {
        self.piston().random_admissible_state(rng)
    }
}

pub fn build_open_piston(params: &OpenPistonParams) -> Result<OpenModel> {
    params.validate()?;
    let base = build_piston(&params.piston())?;
    let ports: Vec<Box<dyn Port>> = params
        .ports
        .iter()
        .map(|p| {
            Box::new(LinearPort {
                chemical_potential: p.mu,
                temperature: p.temperature,
                matter_conductance: p.lambda,
                entropy_conductance: p.sigma,
            }) as Box<dyn Port>
        })
        .collect();
    let sources: Vec<Box<dyn HeatSource>> = params
        .sources
        .iter()
        .map(|s| {
            Box::new(LinearHeatSource {
                temperature: s.temperature,
                conductance: s.kappa,
            }) as Box<dyn HeatSource>
        })
        .collect();
    Ok(OpenModel::new(Box::new(base), ports, sources))
}
