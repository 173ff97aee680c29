//! Open simple systems: matter ports and heat sources attached to a model
//! whose Lagrangian also depends on the mole number `N`.

use nalgebra::DVector;

use crate::dynamics::{
    evaluate, multiplier_residual, run, Flow, Rates, SimOptions, Trajectory,
};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{check_dims, constraint_matrix, temperature, Phase, ThermoModel};

/// The system's own potentials `T = −∂L/∂S` and `μ = −∂L/∂N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potentials {
    pub temperature: f64,
    pub chemical_potential: f64,
}

/// A matter port with chemical potential `μᵃ` and temperature `Tᵃ`.
pub trait Port: Send + Sync {
    fn chemical_potential(&self, x: &Phase) -> f64;
    fn temperature(&self, x: &Phase) -> f64;
    /// `𝒥ᵃ`, moles per unit time into the system.
    fn matter_flux(&self, x: &Phase, system: &Potentials) -> f64;
    /// `𝒥_Sᵃ`.
    fn entropy_flux(&self, x: &Phase, system: &Potentials) -> f64;
}

/// A heat source at temperature `Tᵇ`.
pub trait HeatSource: Send + Sync {
    fn temperature(&self, x: &Phase) -> f64;
    /// `𝒥_Sᵇ`.
    fn entropy_flux(&self, x: &Phase, system: &Potentials) -> f64;
}

/// Port with fluxes linear in the affinities:
/// `𝒥ᵃ = λ(μᵃ − μ)`, `𝒥_Sᵃ = σ(Tᵃ − T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPort {
    pub chemical_potential: f64,
    pub temperature: f64,
    pub matter_conductance: f64,
    pub entropy_conductance: f64,
}

impl Port for LinearPort {
    fn chemical_potential(&self, _x: &Phase) -> f64 {
        self.chemical_potential
    }

    fn temperature(&self, _x: &Phase) -> f64 {
        self.temperature
    }

    fn matter_flux(&self, _x: &Phase, system: &Potentials) -> f64 {
        self.matter_conductance * (self.chemical_potential - system.chemical_potential)
    }

    fn entropy_flux(&self, _x: &Phase, system: &Potentials) -> f64 {
        self.entropy_conductance * (self.temperature - system.temperature)
    }
}

/// Heat source with `𝒥_Sᵇ = κ(Tᵇ − T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearHeatSource {
    pub temperature: f64,
    pub conductance: f64,
}

impl HeatSource for LinearHeatSource {
    fn temperature(&self, _x: &Phase) -> f64 {
        self.temperature
    }

    fn entropy_flux(&self, _x: &Phase, system: &Potentials) -> f64 {
        self.conductance * (self.temperature - system.temperature)
    }
}

/// A model together with its `A` ports and `B` heat sources.
pub struct OpenModel {
    base: Box<dyn ThermoModel>,
    ports: Vec<Box<dyn Port>>,
    heat_sources: Vec<Box<dyn HeatSource>>,
}

impl std::fmt::Debug for OpenModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OpenModel")
            .field("dof", &self.base.dof())
            .field("ports", &self.ports.len())
            .field("heat_sources", &self.heat_sources.len())
            .finish()
    }
}

impl OpenModel {
    pub fn new(
        base: Box<dyn ThermoModel>,
        ports: Vec<Box<dyn Port>>,
        heat_sources: Vec<Box<dyn HeatSource>>,
    ) -> Self {
        Self {
            base,
            ports,
            heat_sources,
        }
    }

    pub fn base(&self) -> &dyn ThermoModel {
        self.base.as_ref()
    }

    pub fn port_count(&self) -> usize {
        self.ports.len()
    }

    pub fn heat_source_count(&self) -> usize {
        self.heat_sources.len()
    }

    pub fn is_closed(&self) -> bool {
        self.ports.is_empty() && self.heat_sources.is_empty()
    }

    pub fn potentials(&self, x: &Phase) -> Result<Potentials> {
        Ok(Potentials {
            temperature: temperature(self.base(), x)?,
            chemical_potential: -self.base.dl_dn(x),
        })
    }

    /// Port and source quantities at `x`.
    pub fn fluxes(&self, x: &Phase) -> Result<Fluxes> {
        let system = self.potentials(x)?;
        let mut fluxes = Fluxes {
            system,
            ports: Vec::with_capacity(self.ports.len()),
            sources: Vec::with_capacity(self.heat_sources.len()),
        };
        for port in &self.ports {
            let t = port.temperature(x);
            if !(t > 0.0) {
                return Err(Error::ModelDomain {
                    temperature: t,
                    floor: 0.0,
                });
            }
            fluxes.ports.push(PortState {
                chemical_potential: port.chemical_potential(x),
                temperature: t,
                matter_flux: port.matter_flux(x, &system),
                entropy_flux: port.entropy_flux(x, &system),
            });
        }
        for source in &self.heat_sources {
            let t = source.temperature(x);
            if !(t > 0.0) {
                return Err(Error::ModelDomain {
                    temperature: t,
                    floor: 0.0,
                });
            }
            fluxes.sources.push(SourceState {
                temperature: t,
                entropy_flux: source.entropy_flux(x, &system),
            });
        }
        Ok(fluxes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortState {
    pub chemical_potential: f64,
    pub temperature: f64,
    pub matter_flux: f64,
    pub entropy_flux: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceState {
    pub temperature: f64,
    pub entropy_flux: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fluxes {
    pub system: Potentials,
    pub ports: Vec<PortState>,
    pub sources: Vec<SourceState>,
}

impl Fluxes {
    /// `Σ𝒥ᵃ`.
    pub fn matter_inflow(&self) -> f64 {
        self.ports.iter().map(|p| p.matter_flux).sum()
    }

    /// `Σ𝒥_Sᵃ + Σ𝒥_Sᵇ`.
    pub fn entropy_transfer(&self) -> f64 {
        self.ports.iter().map(|p| p.entropy_flux).sum::<f64>()
            + self.sources.iter().map(|s| s.entropy_flux).sum::<f64>()
    }
}

/// `(v̇, μ, Ṅ, Ṡ)` of the open system at `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenRates {
    pub vdot: DVector<f64>,
    pub multipliers: DVector<f64>,
    pub ndot: f64,
    pub sdot: f64,
}

/// `(Ṡ, Ṅ)` from the entropy balance of the open system.
///
/// With no ports and no sources this is exactly the closed-system rate.
fn thermal_rates(model: &OpenModel, x: &Phase) -> Result<(f64, f64)> {
    let base = model.base();
    if model.is_closed() {
        return Ok((crate::model::entropy_rate(base, x)?, 0.0));
    }
    let fluxes = model.fluxes(x)?;
    let dl_ds = base.dl_ds(x);
    let dl_dn = base.dl_dn(x);
    let mut exchange = 0.0;
    for p in &fluxes.ports {
        exchange += p.matter_flux * (dl_dn + p.chemical_potential) + p.entropy_flux * (dl_ds + p.temperature);
    }
    let mut heating = 0.0;
    for s in &fluxes.sources {
        heating += s.entropy_flux * (dl_ds + s.temperature);
    }
    let friction = base.friction(x).dot(&x.v);
    let sdot = (friction - exchange - heating) / dl_ds + fluxes.entropy_transfer();
    Ok((sdot, fluxes.matter_inflow()))
}

pub fn open_rhs(model: &OpenModel, x: &Phase) -> Result<OpenRates> {
    check_dims(model.base(), x)?;
    let rates = evaluate(&OpenFlow { model }, x)?;
    Ok(OpenRates {
        vdot: rates.vdot,
        multipliers: rates.mu,
        ndot: rates.ndot,
        sdot: rates.sdot,
    })
}

/// `I = −⟨F^fr, v⟩/T + Σ[𝒥ᵃ(μᵃ − μ) + 𝒥_Sᵃ(Tᵃ − T)]/T + Σ𝒥_Sᵇ(Tᵇ − T)/T`.
pub fn internal_entropy_production(model: &OpenModel, x: &Phase) -> Result<f64> {
    check_dims(model.base(), x)?;
    let fluxes = model.fluxes(x)?;
    let t = fluxes.system.temperature;
    let mu = fluxes.system.chemical_potential;
    let friction = -model.base().friction(x).dot(&x.v) / t;
    let mut mixing = 0.0;
    for p in &fluxes.ports {
        mixing += p.matter_flux * (p.chemical_potential - mu) + p.entropy_flux * (p.temperature - t);
    }
    let mut heating = 0.0;
    for s in &fluxes.sources {
        heating += s.entropy_flux * (s.temperature - t);
    }
    Ok(friction + mixing / t + heating / t)
}

/// External power split into work, heat and matter contributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerDecomposition {
    /// `⟨F^ext, v⟩`.
    pub work: f64,
    /// `Σ𝒥_Sᵇ Tᵇ`.
    pub heat: f64,
    /// `Σ(𝒥ᵃ μᵃ + 𝒥_Sᵃ Tᵃ)`.
    pub matter: f64,
}

impl PowerDecomposition {
    pub fn total(&self) -> f64 {
        self.work + self.heat + self.matter
    }
}

pub fn external_power_decomposition(model: &OpenModel, x: &Phase) -> Result<PowerDecomposition> {
    check_dims(model.base(), x)?;
    let work = model.base().external_force(x).dot(&x.v);
    if model.is_closed() {
        return Ok(PowerDecomposition {
            work,
            heat: 0.0,
            matter: 0.0,
        });
    }
    let fluxes = model.fluxes(x)?;
    Ok(PowerDecomposition {
        work,
        heat: fluxes.sources.iter().map(|s| s.entropy_flux * s.temperature).sum(),
        matter: fluxes
            .ports
            .iter()
            .map(|p| p.matter_flux * p.chemical_potential + p.entropy_flux * p.temperature)
            .sum(),
    })
}

/// A point `(t, q, S, N, v, 𝗉, p)` of the covariant Pontryagin bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariantPoint {
    pub t: f64,
    pub q: DVector<f64>,
    pub entropy: f64,
    pub moles: f64,
    pub v: DVector<f64>,
    /// Momentum conjugate to time.
    pub p_time: f64,
    pub p: DVector<f64>,
}

impl CovariantPoint {
    /// The point over `x` with `p = ∂L/∂v` and `𝗉` fixed by `ℰ = 0`.
    pub fn on_solution(model: &dyn ThermoModel, x: &Phase) -> Self {
        let p = model.dl_dv(x);
        let p_time = model.lagrangian(x) - p.dot(&x.v);
        Self {
            t: x.t,
            q: x.q.clone(),
            entropy: x.entropy,
            moles: x.moles,
            v: x.v.clone(),
            p_time,
            p,
        }
    }

    /// `ℰ = 𝗉 + ⟨p, v⟩ − L(t, x, v)`.
    pub fn covariant_energy(&self, model: &dyn ThermoModel) -> f64 {
        let x = Phase {
            t: self.t,
            q: self.q.clone(),
            v: self.v.clone(),
            entropy: self.entropy,
            moles: self.moles,
        };
        self.p_time + self.p.dot(&self.v) - model.lagrangian(&x)
    }
}

/// Diagnostics stored with each sample of an open run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpenSample {
    pub internal_entropy_production: f64,
    pub p_w: f64,
    pub p_h: f64,
    pub p_m: f64,
    pub p_time: f64,
}

/// Largest violation of the open-system equations at a solver state:
/// the mechanical balance along `Δ_Q` and in multiplier form, the mole and
/// entropy balances, and `⟨ω, v⟩ = 0`.
pub fn open_residual(model: &OpenModel, x: &Phase, rates: &OpenRates) -> Result<f64> {
    let base = model.base();
    let omega = constraint_matrix(base, x)?;
    let delta = linalg::null_space(&omega);
    let balance = multiplier_residual(base, x, &rates.vdot, &rates.multipliers, rates.sdot, rates.ndot)?;
    let mut worst = balance.amax();
    let tangential = delta.transpose() * (balance + omega.transpose() * &rates.multipliers);
    worst = worst.max(tangential.amax());
    worst = worst.max((&omega * &x.v).amax());
    let fluxes = model.fluxes(x)?;
    worst = worst.max((rates.ndot - fluxes.matter_inflow()).abs());
    let production = internal_entropy_production(model, x)?;
    worst = worst.max((rates.sdot - fluxes.entropy_transfer() - production).abs());
    Ok(worst)
}

struct OpenFlow<'a> {
    model: &'a OpenModel,
}

impl Flow for OpenFlow<'_> {
    fn model(&self) -> &dyn ThermoModel {
        self.model.base()
    }

    fn thermal_rates(&self, x: &Phase) -> Result<(f64, f64)> {
        thermal_rates(self.model, x)
    }

    fn supplied_power(&self, x: &Phase) -> Result<f64> {
        Ok(external_power_decomposition(self.model, x)?.total())
    }

    fn residual(&self, x: &Phase, rates: &Rates) -> Result<f64> {
        let open = OpenRates {
            vdot: rates.vdot.clone(),
            multipliers: rates.mu.clone(),
            ndot: rates.ndot,
            sdot: rates.sdot,
        };
        open_residual(self.model, x, &open)
    }

    fn open_sample(&self, x: &Phase, _rates: &Rates) -> Result<Option<OpenSample>> {
        let power = external_power_decomposition(self.model, x)?;
        Ok(Some(OpenSample {
            internal_entropy_production: internal_entropy_production(self.model, x)?,
            p_w: power.work,
            p_h: power.heat,
            p_m: power.matter,
            p_time: CovariantPoint::on_solution(self.model.base(), x).p_time,
        }))
    }
}

/// Integrates the open-system equations; `initial.moles` is the initial `N`.
pub fn open_simulate(
    model: &OpenModel,
    initial: &Phase,
    t_span: (f64, f64),
    dt: f64,
    options: &SimOptions,
) -> Result<Trajectory> {
    run(&OpenFlow { model }, initial, t_span, dt, options)
}
