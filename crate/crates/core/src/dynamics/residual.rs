use nalgebra::{DMatrix, DVector};

use super::kkt::Rates;
use super::{GeneralizedEnergy, PontryaginPoint, PontryaginRate};
use crate::error::{Error, Result};
use crate::linalg::{self, LinearDiracDescriptor, PresymplecticForm, Subspace};
use crate::model::{
    check_dims, constraint_matrix, inverse_legendre, momentum_rate, variational_constraint, Phase,
    ThermoModel,
};

fn check_point(model: &dyn ThermoModel, x: &PontryaginPoint) -> Result<()> {
    check_dims(model, &x.phase())?;
    if x.p.len() != model.dof() {
        return Err(Error::dim("momentum", model.dof(), x.p.len()));
    }
    Ok(())
}

fn check_rate(model: &dyn ThermoModel, xdot: &PontryaginRate) -> Result<()> {
    let n = model.dof();
    for (context, len) in [
        ("rate q", xdot.q.len()),
        ("rate v", xdot.v.len()),
        ("rate p", xdot.p.len()),
    ] {
        if len != n {
            return Err(Error::dim(context, n, len));
        }
    }
    Ok(())
}

/// Largest violation of the local conditions for
/// `((x, ẋ), dℰ(x) − ℱ^ext(x)) ∈ D_{Δ_𝒫}(x)`.
///
/// The groups are the covector condition paired against a basis of `Δ_Q`,
/// the entropy condition `∂L/∂S·Ṡ = ⟨F^fr, q̇⟩`, `β = 0`, `Υ = 0`,
/// `u = q̇ ∈ Δ_Q` and `Ψ = Ṡ`. When `multipliers` are given the multiplier
/// form `ṗ − ∂L/∂q − F^fr − F^ext = ωᵀμ` is checked as well.
pub fn dirac_residual(
    model: &dyn ThermoModel,
    x: &PontryaginPoint,
    xdot: &PontryaginRate,
    multipliers: Option<&DVector<f64>>,
) -> Result<f64> {
    check_point(model, x)?;
    check_rate(model, xdot)?;
    let phase = x.phase();
    let dl_ds = model.dl_ds(&phase);
    let dl_dq = model.dl_dq(&phase);
    let friction = model.friction(&phase);
    let external = model.external_force(&phase);
    let omega = constraint_matrix(model, &phase)?;
    let delta = linalg::null_space(&omega);

    // Covector from dℰ − ℱ^ext: α = −∂L/∂q − F^ext, 𝒯 = −∂L/∂S.
    let alpha = -&dl_dq - &external;
    let theta = -dl_ds;
    let covector = (&xdot.p + &alpha) * dl_ds + &friction * (xdot.lambda + theta);
    let mut worst = (delta.transpose() * covector).amax();

    worst = worst.max((dl_ds * xdot.entropy - friction.dot(&xdot.q)).abs());
    worst = worst.max((&x.p - model.dl_dv(&phase)).amax());
    worst = worst.max(x.lambda.abs());
    worst = worst.max((&x.v - &xdot.q).amax());
    worst = worst.max((&omega * &xdot.q).amax());
    worst = worst.max((x.w - xdot.entropy).abs());

    if let Some(mu) = multipliers {
        if mu.len() != omega.nrows() {
            return Err(Error::dim("multipliers", omega.nrows(), mu.len()));
        }
        let balance = &xdot.p - dl_dq - friction - external - omega.transpose() * mu;
        worst = worst.max(balance.amax());
    }
    Ok(worst)
}

/// Dirac residual of a solver state: the rate is rebuilt from the solved
/// accelerations with `ṗ` expanded through the mass matrix.
pub(crate) fn closed_sample_residual(model: &dyn ThermoModel, x: &Phase, rates: &Rates) -> Result<f64> {
    let point = PontryaginPoint::on_solution(model, x, rates.sdot);
    let rate = solution_rate(model, x, rates);
    dirac_residual(model, &point, &rate, Some(&rates.mu))
}

pub(crate) fn solution_rate(model: &dyn ThermoModel, x: &Phase, rates: &Rates) -> PontryaginRate {
    PontryaginRate {
        q: x.v.clone(),
        entropy: rates.sdot,
        v: rates.vdot.clone(),
        w: 0.0,
        p: momentum_rate(model, x, &rates.vdot, rates.sdot, rates.ndot),
        lambda: 0.0,
    }
}

/// `Δ_𝒫 = (Tπ)⁻¹(C_V)`: `C_V` in the `(q, S)` slots, every other slot free.
fn pontryagin_distribution(model: &dyn ThermoModel, x: &Phase) -> Result<Subspace> {
    let n = model.dof();
    let cv = variational_constraint(model, x)?.null_space();
    let dim = 3 * (n + 1);
    let free = 2 * (n + 1);
    let mut basis = DMatrix::zeros(dim, cv.dim() + free);
    basis.view_mut((0, 0), (n + 1, cv.dim())).copy_from(cv.basis());
    for j in 0..free {
        basis[(n + 1 + j, cv.dim() + j)] = 1.0;
    }
    Subspace::from_basis(&basis)
}

/// `Ω_𝒫 = dqⁱ ∧ dpᵢ + dS ∧ dΛ` in the coordinates `(q, S, v, W, p, Λ)`.
fn pontryagin_form(n: usize) -> PresymplecticForm {
    let dim = 3 * (n + 1);
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..=n {
        let base = i;
        let fiber = 2 * (n + 1) + i;
        m[(base, fiber)] = 1.0;
        m[(fiber, base)] = -1.0;
    }
    PresymplecticForm::new(m).expect("antisymmetric by construction")
}

/// The Dirac structure `D_{Δ_𝒫}(x)` induced by `Δ_𝒫` and `Ω_𝒫`.
pub fn pontryagin_dirac(model: &dyn ThermoModel, x: &PontryaginPoint) -> Result<LinearDiracDescriptor> {
    check_point(model, x)?;
    let delta = pontryagin_distribution(model, &x.phase())?;
    linalg::induced_dirac(&delta, &pontryagin_form(model.dof()))
}

/// Distance of `((x, ẋ), dℰ(x) − ℱ^ext(x))` from `D_{Δ_𝒫}(x)`.
pub fn pontryagin_membership(
    model: &dyn ThermoModel,
    x: &PontryaginPoint,
    xdot: &PontryaginRate,
) -> Result<f64> {
    check_rate(model, xdot)?;
    let d = pontryagin_dirac(model, x)?;
    let n = model.dof();
    let mut zeta = GeneralizedEnergy::new(model).differential(x);
    let external = model.external_force(&x.phase());
    let mut q_slot = zeta.rows_mut(0, n);
    q_slot -= external;
    let dim = 3 * (n + 1);
    let mut candidate = DVector::zeros(2 * dim);
    candidate.rows_mut(0, dim).copy_from(&xdot.coordinates());
    candidate.rows_mut(dim, dim).copy_from(&zeta);
    linalg::membership_residual(&d, &candidate)
}

/// `d_D L̃(q, S, v, W)`: base point `(q, S, ∂L/∂v, 0)` and covector
/// `(−∂L/∂q, −∂L/∂S, v, W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracDifferential {
    pub base: DVector<f64>,
    pub covector: DVector<f64>,
}

pub fn dirac_differential(model: &dyn ThermoModel, y: &Phase, w: f64) -> DiracDifferential {
    let n = y.q.len();
    let mut base = DVector::zeros(2 * (n + 1));
    base.rows_mut(0, n).copy_from(&y.q);
    base[n] = y.entropy;
    base.rows_mut(n + 1, n).copy_from(&model.dl_dv(y));
    let mut covector = DVector::zeros(2 * (n + 1));
    covector.rows_mut(0, n).copy_from(&(-model.dl_dq(y)));
    covector[n] = -model.dl_ds(y);
    covector.rows_mut(n + 1, n).copy_from(&y.v);
    covector[2 * n + 1] = w;
    DiracDifferential { base, covector }
}

/// A point `z = (q, S, p, Λ)` of `T*𝒬`.
#[derive(Debug, Clone, PartialEq)]
pub struct CotangentPoint {
    pub t: f64,
    pub q: DVector<f64>,
    pub entropy: f64,
    pub p: DVector<f64>,
    pub lambda: f64,
    pub moles: f64,
}

/// `ż = (q̇, Ṡ, ṗ, Λ̇)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CotangentRate {
    pub q: DVector<f64>,
    pub entropy: f64,
    pub p: DVector<f64>,
    pub lambda: f64,
}

impl CotangentPoint {
    pub fn from_pontryagin(x: &PontryaginPoint) -> Self {
        Self {
            t: x.t,
            q: x.q.clone(),
            entropy: x.entropy,
            p: x.p.clone(),
            lambda: x.lambda,
            moles: x.moles,
        }
    }

    fn base(&self, n: usize) -> Phase {
        Phase {
            t: self.t,
            q: self.q.clone(),
            v: DVector::zeros(n),
            entropy: self.entropy,
            moles: self.moles,
        }
    }
}

impl CotangentRate {
    pub fn from_pontryagin(xdot: &PontryaginRate) -> Self {
        Self {
            q: xdot.q.clone(),
            entropy: xdot.entropy,
            p: xdot.p.clone(),
            lambda: xdot.lambda,
        }
    }
}

fn check_cotangent(
    model: &dyn ThermoModel,
    z: &CotangentPoint,
    zdot: &CotangentRate,
    y: &Phase,
) -> Result<()> {
    let n = model.dof();
    check_dims(model, y)?;
    for (context, len) in [
        ("cotangent q", z.q.len()),
        ("cotangent p", z.p.len()),
        ("cotangent rate q", zdot.q.len()),
        ("cotangent rate p", zdot.p.len()),
    ] {
        if len != n {
            return Err(Error::dim(context, n, len));
        }
    }
    Ok(())
}

/// Largest violation of the cotangent-bundle form of the equations of motion
/// at `z` with velocity data `y = (q, S, v)` and entropy velocity `w`.
///
/// `T(q, p, S)` and `ℱ^fr(q, p, S)` are evaluated through the inverse
/// Legendre transform of `p`. The external force enters the covector
/// condition alongside `∂L/∂q`.
pub fn cotangent_residual(
    model: &dyn ThermoModel,
    z: &CotangentPoint,
    zdot: &CotangentRate,
    y: &Phase,
    w: f64,
) -> Result<f64> {
    check_cotangent(model, z, zdot, y)?;
    let n = model.dof();
    let v_of_p = inverse_legendre(model, &z.base(n), &z.p)?;
    let fiber = z.base(n).with_velocity(v_of_p);
    let temperature = -model.dl_ds(&fiber);
    let friction = model.friction(&fiber);

    let dl_dq = model.dl_dq(y);
    let dl_ds = model.dl_ds(y);
    let external = model.external_force(y);
    let omega = constraint_matrix(model, y)?;
    let delta = linalg::null_space(&omega);

    let covector = -(&zdot.p - dl_dq - external) * temperature + &friction * (zdot.lambda - dl_ds);
    let mut worst = (delta.transpose() * covector).amax();
    worst = worst.max((temperature * zdot.entropy + friction.dot(&zdot.q)).abs());
    worst = worst.max((&zdot.q - &y.v).amax());
    worst = worst.max((&omega * &zdot.q).amax());
    worst = worst.max((w - zdot.entropy).abs());
    worst = worst.max((&z.p - model.dl_dv(y)).amax());
    worst = worst.max(z.lambda.abs());
    worst = worst.max((&z.q - &y.q).amax());
    worst = worst.max((z.entropy - y.entropy).abs());
    Ok(worst)
}

/// The Dirac structure on `T*𝒬` induced by `(Tπ)⁻¹(C_V)` and the canonical
/// form `dqⁱ ∧ dpᵢ + dS ∧ dΛ`, with `C_V` evaluated at the velocity `v`.
pub fn cotangent_dirac(model: &dyn ThermoModel, y: &Phase) -> Result<LinearDiracDescriptor> {
    let n = model.dof();
    let cv = variational_constraint(model, y)?.null_space();
    let dim = 2 * (n + 1);
    let mut basis = DMatrix::zeros(dim, cv.dim() + n + 1);
    basis.view_mut((0, 0), (n + 1, cv.dim())).copy_from(cv.basis());
    for j in 0..=n {
        basis[(n + 1 + j, cv.dim() + j)] = 1.0;
    }
    let delta = Subspace::from_basis(&basis)?;
    linalg::induced_dirac(&delta, &PresymplecticForm::canonical(n + 1))
}

/// Distance of `((z, ż), d_D L̃(y) − F̃^ext(y))` from the induced Dirac
/// structure on `T*𝒬`.
pub fn cotangent_membership(
    model: &dyn ThermoModel,
    z: &CotangentPoint,
    zdot: &CotangentRate,
    y: &Phase,
    w: f64,
) -> Result<f64> {
    check_cotangent(model, z, zdot, y)?;
    let n = model.dof();
    let v_of_p = inverse_legendre(model, &z.base(n), &z.p)?;
    let d = cotangent_dirac(model, &z.base(n).with_velocity(v_of_p))?;
    let mut covector = dirac_differential(model, y, w).covector;
    let external = model.external_force(y);
    let mut q_slot = covector.rows_mut(0, n);
    q_slot -= external;
    let dim = 2 * (n + 1);
    let mut candidate = DVector::zeros(2 * dim);
    let mut zdot_coords = DVector::zeros(dim);
    zdot_coords.rows_mut(0, n).copy_from(&zdot.q);
    zdot_coords[n] = zdot.entropy;
    zdot_coords.rows_mut(n + 1, n).copy_from(&zdot.p);
    zdot_coords[2 * n + 1] = zdot.lambda;
    candidate.rows_mut(0, dim).copy_from(&zdot_coords);
    candidate.rows_mut(dim, dim).copy_from(&covector);
    let fiber_gap = (&z.p - model.dl_dv(y)).amax().max(z.lambda.abs());
    Ok(linalg::membership_residual(&d, &candidate)?.max(fiber_gap))
}
