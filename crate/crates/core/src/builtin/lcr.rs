use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{positive, Signal};
use crate::error::{Error, Result};
use crate::model::{ForceJacobians, Phase, ThermoModel};

/// Kirchhoff current law on the coordinates `(q_L, q_C, q_V, q_R)`.
pub const LCR_KCL: [[f64; 4]; 2] = [[-1.0, 0.0, 1.0, 0.0], [0.0, -1.0, 1.0, -1.0]];

/// Series source, inductor and capacitor with a resistor across the capacitor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LcrParams {
    #[serde(rename = "L_ind")]
    pub inductance: f64,
    #[serde(rename = "C")]
    pub capacitance: f64,
    #[serde(rename = "R")]
    pub resistance: f64,
    #[serde(rename = "V")]
    pub voltage: Signal,
    /// Heat capacity of the resistor.
    #[serde(rename = "c_R")]
    pub heat_capacity: f64,
    /// Temperature at `S = S₀`.
    #[serde(rename = "T0")]
    pub t0: f64,
    #[serde(rename = "S0")]
    pub s0: f64,
}

impl Default for LcrParams {
    fn default() -> Self {
        Self {
            inductance: 0.5,
            capacitance: 0.02,
            resistance: 2.0,
            voltage: Signal::Constant(0.0),
            heat_capacity: 1.0,
            t0: 300.0,
            s0: 0.0,
        }
    }
}

impl LcrParams {
    pub fn validate(&self) -> Result<()> {
        positive("L_ind", self.inductance)?;
        positive("C", self.capacitance)?;
        positive("R", self.resistance)?;
        positive("c_R", self.heat_capacity)?;
        positive("T0", self.t0)?;
        if !self.s0.is_finite() {
            return Err(Error::param("S0", "must be finite"));
        }
        self.voltage.validate("V")
    }

    /// Consistent velocities for inductor current `f_L` and charge `q_C`:
    /// `f_R = q_C/(RC)`, `f_V = f_L`, `f_C = f_L − f_R`.
    pub fn consistent_velocity(&self, f_l: f64, q_c: f64) -> DVector<f64> {
        let f_r = q_c / (self.resistance * self.capacitance);
        DVector::from_vec(vec![f_l, f_l - f_r, f_l, f_r])
    }

    /// Charged capacitor, small inductor current, resistor at `T₀`.
    pub fn default_initial(&self) -> Phase {
        let q_c = 0.01;
        Phase::new(
            DVector::from_vec(vec![0.0, q_c, 0.0, 0.0]),
            self.consistent_velocity(0.2, q_c),
            self.s0,
        )
    }

    pub fn random_admissible_state(&self, rng: &mut impl Rng) -> Phase {
        let q = DVector::from_fn(4, |i, _| {
            if i == 1 {
                rng.gen_range(-0.05..0.05)
            } else {
                rng.gen_range(-1.0..1.0)
            }
        });
        let v = self.consistent_velocity(rng.gen_range(-1.0..1.0), q[1]);
        let temperature: f64 = rng.gen_range(200.0..400.0);
        let s = self.s0 + self.heat_capacity * (temperature / self.t0).ln();
        Phase::new(q, v, s).at_time(rng.gen_range(0.0..1.0))
    }
}

/// The circuit as a constrained mechanical system: the inductor carries the
/// only inertia, the capacitor the potential energy, the resistor friction on
/// the `q_R` slot and the source an external force on the `q_V` slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Lcr {
    params: LcrParams,
}

pub fn build_lcr(params: &LcrParams) -> Result<Lcr> {
    params.validate()?;
    Ok(Lcr {
        params: params.clone(),
    })
}

impl Lcr {
    pub fn params(&self) -> &LcrParams {
        &self.params
    }

    /// `U_int(S) = c_R T₀ exp((S − S₀)/c_R)`.
    pub fn internal_energy(&self, entropy: f64) -> f64 {
        let p = &self.params;
        p.heat_capacity * p.t0 * ((entropy - p.s0) / p.heat_capacity).exp()
    }

    pub fn resistor_temperature(&self, entropy: f64) -> f64 {
        let p = &self.params;
        p.t0 * ((entropy - p.s0) / p.heat_capacity).exp()
    }

    /// `½ L f_L² + q_C²/(2C) + U_int(S)`.
    pub fn total_energy(&self, x: &Phase) -> f64 {
        let p = &self.params;
        0.5 * p.inductance * x.v[0] * x.v[0]
            + x.q[1] * x.q[1] / (2.0 * p.capacitance)
            + self.internal_energy(x.entropy)
    }
}

impl ThermoModel for Lcr {
    fn dof(&self) -> usize {
        4
    }

    fn constraint_count(&self) -> usize {
        2
    }

    fn lagrangian(&self, x: &Phase) -> f64 {
        let p = &self.params;
        0.5 * p.inductance * x.v[0] * x.v[0]
            - x.q[1] * x.q[1] / (2.0 * p.capacitance)
            - self.internal_energy(x.entropy)
    }

    fn dl_dq(&self, x: &Phase) -> DVector<f64> {
        DVector::from_vec(vec![0.0, -x.q[1] / self.params.capacitance, 0.0, 0.0])
    }

    fn dl_dv(&self, x: &Phase) -> DVector<f64> {
        DVector::from_vec(vec![self.params.inductance * x.v[0], 0.0, 0.0, 0.0])
    }

    fn dl_ds(&self, x: &Phase) -> f64 {
        -self.resistor_temperature(x.entropy)
    }

    fn mass_matrix(&self, _x: &Phase) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = self.params.inductance;
        m
    }

    fn friction(&self, x: &Phase) -> DVector<f64> {
        DVector::from_vec(vec![0.0, 0.0, 0.0, -self.params.resistance * x.v[3]])
    }

    fn external_force(&self, x: &Phase) -> DVector<f64> {
        DVector::from_vec(vec![0.0, 0.0, self.params.voltage.value(x.t), 0.0])
    }

    fn constraint_forms(&self, _x: &Phase) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 4, LCR_KCL.as_flattened())
    }

    fn constraint_rate(&self, _x: &Phase) -> DMatrix<f64> {
        DMatrix::zeros(2, 4)
    }

    fn momentum_q_jacobian(&self, _x: &Phase) -> DMatrix<f64> {
        DMatrix::zeros(4, 4)
    }

    fn momentum_s_derivative(&self, _x: &Phase) -> DVector<f64> {
        DVector::zeros(4)
    }

    fn momentum_n_derivative(&self, _x: &Phase) -> DVector<f64> {
        DVector::zeros(4)
    }

    fn momentum_t_derivative(&self, _x: &Phase) -> DVector<f64> {
        DVector::zeros(4)
    }

    fn dl_dt(&self, _x: &Phase) -> f64 {
        0.0
    }

    fn force_jacobians(&self, x: &Phase) -> Option<ForceJacobians> {
        let p = &self.params;
        let mut dq = DMatrix::zeros(4, 4);
        dq[(1, 1)] = -1.0 / p.capacitance;
        let mut dv = DMatrix::zeros(4, 4);
        dv[(3, 3)] = -p.resistance;
        let mut dt = DVector::zeros(4);
        dt[2] = p.voltage.derivative(x.t);
        Some(ForceJacobians {
            dq,
            dv,
            ds: DVector::zeros(4),
            dn: DVector::zeros(4),
            dt,
        })
    }
}
