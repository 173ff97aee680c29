//! Closed-system evolution: KKT assembly, time stepping, trajectories, and
//! the Dirac-structure residuals used to certify them.

mod csv;
mod energy;
mod integrate;
mod kkt;
mod residual;

use nalgebra::DVector;

use crate::model::{Phase, ThermoModel};

pub use crate::model::entropy_rate;
pub use csv::{csv_header, write_csv};
pub use energy::{energy_balance_report, EnergyBalanceReport};
pub use integrate::{
    simulate, step, Failure, Sample, Scheme, SimOptions, StepReport, Tolerances, Trajectory,
};
pub(crate) use integrate::{evaluate, run, Flow};
pub use kkt::{assemble_kkt, multiplier_residual, KktSystem, KKT_CONDITION_LIMIT};
pub(crate) use kkt::Rates;
pub use residual::{
    cotangent_dirac, cotangent_membership, cotangent_residual, dirac_differential,
    dirac_residual, pontryagin_dirac, pontryagin_membership, CotangentPoint, CotangentRate,
    DiracDifferential,
};

/// A point `(q, S, v, W, p, Λ)` of the Pontryagin bundle, together with the
/// time and mole number the evaluators are queried at.
#[derive(Debug, Clone, PartialEq)]
pub struct PontryaginPoint {
    pub t: f64,
    pub q: DVector<f64>,
    pub entropy: f64,
    pub v: DVector<f64>,
    pub w: f64,
    pub p: DVector<f64>,
    pub lambda: f64,
    pub moles: f64,
}

impl PontryaginPoint {
    /// The point with `p = ∂L/∂v`, `Λ = 0`, `W = Ṡ` over `x`.
    pub fn on_solution(model: &dyn ThermoModel, x: &Phase, sdot: f64) -> Self {
        Self {
            t: x.t,
            q: x.q.clone(),
            entropy: x.entropy,
            v: x.v.clone(),
            w: sdot,
            p: model.dl_dv(x),
            lambda: 0.0,
            moles: x.moles,
        }
    }

    pub fn phase(&self) -> Phase {
        Phase {
            t: self.t,
            q: self.q.clone(),
            v: self.v.clone(),
            entropy: self.entropy,
            moles: self.moles,
        }
    }

    /// Coordinates `(q, S, v, W, p, Λ)` as one vector of length `3(n+1)`.
    pub fn coordinates(&self) -> DVector<f64> {
        let n = self.q.len();
        let mut x = DVector::zeros(3 * (n + 1));
        x.rows_mut(0, n).copy_from(&self.q);
        x[n] = self.entropy;
        x.rows_mut(n + 1, n).copy_from(&self.v);
        x[2 * n + 1] = self.w;
        x.rows_mut(2 * n + 2, n).copy_from(&self.p);
        x[3 * n + 2] = self.lambda;
        x
    }
}

/// Time derivative `(q̇, Ṡ, v̇, Ẇ, ṗ, Λ̇)` of a curve in the Pontryagin bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct PontryaginRate {
    pub q: DVector<f64>,
    pub entropy: f64,
    pub v: DVector<f64>,
    pub w: f64,
    pub p: DVector<f64>,
    pub lambda: f64,
}

impl PontryaginRate {
    pub fn coordinates(&self) -> DVector<f64> {
        let n = self.q.len();
        let mut x = DVector::zeros(3 * (n + 1));
        x.rows_mut(0, n).copy_from(&self.q);
        x[n] = self.entropy;
        x.rows_mut(n + 1, n).copy_from(&self.v);
        x[2 * n + 1] = self.w;
        x.rows_mut(2 * n + 2, n).copy_from(&self.p);
        x[3 * n + 2] = self.lambda;
        x
    }
}

/// `ℰ(q, S, v, W, p, Λ) = ⟨p, v⟩ + ΛW − L(q, v, S)`.
#[derive(Clone, Copy)]
pub struct GeneralizedEnergy<'a> {
    model: &'a dyn ThermoModel,
}

impl<'a> GeneralizedEnergy<'a> {
    pub fn new(model: &'a dyn ThermoModel) -> Self {
        Self { model }
    }

    pub fn value(&self, x: &PontryaginPoint) -> f64 {
        x.p.dot(&x.v) + x.lambda * x.w - self.model.lagrangian(&x.phase())
    }

    /// `dℰ = (−∂L/∂q, −∂L/∂S, p − ∂L/∂v, Λ, v, W)`.
    pub fn differential(&self, x: &PontryaginPoint) -> DVector<f64> {
        let n = x.q.len();
        let phase = x.phase();
        let mut d = DVector::zeros(3 * (n + 1));
        d.rows_mut(0, n).copy_from(&(-self.model.dl_dq(&phase)));
        d[n] = -self.model.dl_ds(&phase);
        d.rows_mut(n + 1, n).copy_from(&(&x.p - self.model.dl_dv(&phase)));
        d[2 * n + 1] = x.lambda;
        d.rows_mut(2 * n + 2, n).copy_from(&x.v);
        d[3 * n + 2] = x.w;
        d
    }
}

/// Physical energy `E = ⟨∂L/∂v, v⟩ − L`.
pub fn energy(model: &dyn ThermoModel, x: &Phase) -> f64 {
    model.dl_dv(x).dot(&x.v) - model.lagrangian(x)
}

#[cfg(test)]
mod tests;
