//! System definition: Lagrangian, forces, constraint one-forms, and the
//! constraint sets derived from them.
//!
//! A model is anything implementing [`ThermoModel`]. The derivative hooks are
//! analytic and user supplied; [`gradient_check`] compares them against
//! central finite differences and [`custom::CustomModelBuilder::build`] runs it
//! at registration time.

pub mod custom;
pub(crate) mod fd;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, Subspace};
use fd::Slot;

/// Default floor for the temperature `T = -∂L/∂S`.
pub const DEFAULT_TEMPERATURE_FLOOR: f64 = 1e-6;

/// Step used when the time derivative of the constraint forms is finite-differenced.
pub const CONSTRAINT_RATE_STEP: f64 = 1e-6;

/// Relative step for finite-differenced mixed momentum derivatives.
const MIXED_STEP: f64 = 1e-6;

/// A point `(t, q, v, S, N)` at which model evaluators are queried.
///
/// Closed models ignore `moles`; autonomous models ignore `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub t: f64,
    pub q: DVector<f64>,
    pub v: DVector<f64>,
    pub entropy: f64,
    pub moles: f64,
}

impl Phase {
    pub fn new(q: DVector<f64>, v: DVector<f64>, entropy: f64) -> Self {
        Self {
            t: 0.0,
            q,
            v,
            entropy,
            moles: 0.0,
        }
    }

    pub fn at_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn with_moles(mut self, moles: f64) -> Self {
        self.moles = moles;
        self
    }

    pub fn with_velocity(&self, v: DVector<f64>) -> Self {
        Self { v, ..self.clone() }
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }
}

/// Jacobians of the velocity-free force balance
/// `f = ∂L/∂q + F^fr + F^ext − d/dt(∂L/∂v)|_{v̇=0}` seen as a function of the
/// phase point. Only consulted for models whose mass matrix is singular on the
/// constraint distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceJacobians {
    pub dq: DMatrix<f64>,
    pub dv: DMatrix<f64>,
    pub ds: DVector<f64>,
    pub dn: DVector<f64>,
    pub dt: DVector<f64>,
}

/// A simple thermodynamic system with `n` mechanical degrees of freedom, one
/// entropy, and `m` linear velocity constraints `⟨ωʳ(q), v⟩ = 0`.
///
/// Evaluators must be pure.
pub trait ThermoModel: Send + Sync {
    fn dof(&self) -> usize;

    fn constraint_count(&self) -> usize {
        0
    }

    fn lagrangian(&self, x: &Phase) -> f64;

    fn dl_dq(&self, x: &Phase) -> DVector<f64>;

    fn dl_dv(&self, x: &Phase) -> DVector<f64>;

    fn dl_ds(&self, x: &Phase) -> f64;

    /// `∂L/∂N`; only open systems depend on the mole number.
    fn dl_dn(&self, _x: &Phase) -> f64 {
        0.0
    }

    /// `∂²L/∂v²`.
    fn mass_matrix(&self, x: &Phase) -> DMatrix<f64>;

    fn friction(&self, _x: &Phase) -> DVector<f64> {
        DVector::zeros(self.dof())
    }

    fn external_force(&self, _x: &Phase) -> DVector<f64> {
        DVector::zeros(self.dof())
    }

    /// Rows `ωʳ(q)`, an `m × n` matrix.
    fn constraint_forms(&self, _x: &Phase) -> DMatrix<f64> {
        DMatrix::zeros(0, self.dof())
    }

    /// `d/dt ω(q(t))` along `q̇ = v`.
    fn constraint_rate(&self, x: &Phase) -> DMatrix<f64> {
        fd_constraint_rate(self, x)
    }

    /// `∂(∂L/∂v)/∂q`, entry `(i, j)` is `∂²L/∂vᵢ∂qⱼ`.
    fn momentum_q_jacobian(&self, x: &Phase) -> DMatrix<f64> {
        fd::block_jacobian(x, Slot::Q, MIXED_STEP, self.dof(), |y| self.dl_dv(y))
    }

    /// `∂²L/∂v∂S`.
    fn momentum_s_derivative(&self, x: &Phase) -> DVector<f64> {
        fd::central_vector(x, Slot::Entropy, MIXED_STEP, |y| self.dl_dv(y))
    }

    /// `∂²L/∂v∂N`.
    fn momentum_n_derivative(&self, x: &Phase) -> DVector<f64> {
        fd::central_vector(x, Slot::Moles, MIXED_STEP, |y| self.dl_dv(y))
    }

    /// `∂²L/∂v∂t`.
    fn momentum_t_derivative(&self, x: &Phase) -> DVector<f64> {
        fd::central_vector(x, Slot::Time, MIXED_STEP, |y| self.dl_dv(y))
    }

    /// Explicit time dependence `∂L/∂t`.
    fn dl_dt(&self, x: &Phase) -> f64 {
        fd::central_scalar(x, Slot::Time, MIXED_STEP, |y| self.lagrangian(y))
    }

    fn force_jacobians(&self, _x: &Phase) -> Option<ForceJacobians> {
        None
    }

    fn temperature_floor(&self) -> f64 {
        DEFAULT_TEMPERATURE_FLOOR
    }
}

/// Central difference of `ω(q)` along `v` with step [`CONSTRAINT_RATE_STEP`].
pub fn fd_constraint_rate<M: ThermoModel + ?Sized>(model: &M, x: &Phase) -> DMatrix<f64> {
    if model.constraint_count() == 0 {
        return DMatrix::zeros(0, model.dof());
    }
    let h = CONSTRAINT_RATE_STEP;
    let mut plus = x.clone();
    plus.q += h * &x.v;
    let mut minus = x.clone();
    minus.q -= h * &x.v;
    (model.constraint_forms(&plus) - model.constraint_forms(&minus)) / (2.0 * h)
}

pub(crate) fn check_dims(model: &dyn ThermoModel, x: &Phase) -> Result<()> {
    let n = model.dof();
    if x.q.len() != n {
        return Err(Error::dim("phase q", n, x.q.len()));
    }
    if x.v.len() != n {
        return Err(Error::dim("phase v", n, x.v.len()));
    }
    Ok(())
}

/// `T = −∂L/∂S`, rejected unless it is above the model's floor.
pub fn temperature(model: &dyn ThermoModel, x: &Phase) -> Result<f64> {
    let t = -model.dl_ds(x);
    let floor = model.temperature_floor();
    if t.is_nan() || t <= floor {
        return Err(Error::ModelDomain {
            temperature: t,
            floor,
        });
    }
    Ok(t)
}

/// Constraint forms at `x`, checked for full row rank and `m < n`.
pub fn constraint_matrix(model: &dyn ThermoModel, x: &Phase) -> Result<DMatrix<f64>> {
    let n = model.dof();
    let m = model.constraint_count();
    let omega = model.constraint_forms(x);
    if omega.nrows() != m || omega.ncols() != n {
        return Err(Error::dim("constraint forms", m * n, omega.nrows() * omega.ncols()));
    }
    if m > 0 {
        if m >= n {
            return Err(Error::ConstraintRank { rank: m, expected: n - 1 });
        }
        let rank = linalg::numerical_rank(&omega);
        if rank < m {
            return Err(Error::ConstraintRank { rank, expected: m });
        }
    }
    Ok(omega)
}

/// Matrix whose null space is `C_V(q, S, v, W) ⊂ T_{(q,S)}𝒬`.
///
/// The first `m` rows are `[ωʳ(q) | 0]`, the last is `[−F^fr | ∂L/∂S]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalConstraintMatrix {
    rows: DMatrix<f64>,
}

impl VariationalConstraintMatrix {
    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    /// `C_V` itself.
    pub fn null_space(&self) -> Subspace {
        Subspace::span(&linalg::null_space(&self.rows)).expect("finite constraint rows")
    }

    pub fn rank(&self) -> usize {
        linalg::numerical_rank(&self.rows)
    }
}

pub fn variational_constraint(
    model: &dyn ThermoModel,
    x: &Phase,
) -> Result<VariationalConstraintMatrix> {
    check_dims(model, x)?;
    let n = model.dof();
    temperature(model, x)?;
    let omega = constraint_matrix(model, x)?;
    let m = omega.nrows();
    let friction = model.friction(x);
    let mut rows = DMatrix::zeros(m + 1, n + 1);
    rows.view_mut((0, 0), (m, n)).copy_from(&omega);
    for j in 0..n {
        rows[(m, j)] = -friction[j];
    }
    rows[(m, n)] = model.dl_ds(x);
    Ok(VariationalConstraintMatrix { rows })
}

/// `(⟨ωʳ, v⟩, ∂L/∂S·Ṡ − ⟨F^fr, v⟩)`; zero exactly on `C_K`.
pub fn kinematic_residual(model: &dyn ThermoModel, x: &Phase, sdot: f64) -> Result<DVector<f64>> {
    let vc = variational_constraint(model, x)?;
    let mut velocity = DVector::zeros(x.v.len() + 1);
    velocity.rows_mut(0, x.v.len()).copy_from(&x.v);
    velocity[x.v.len()] = sdot;
    Ok(vc.rows() * velocity)
}

/// `C_V(q, S, v, W)° ⊂ T*𝒬`.
pub fn annihilator_of_cv(model: &dyn ThermoModel, x: &Phase) -> Result<Subspace> {
    let vc = variational_constraint(model, x)?;
    Ok(linalg::annihilator(&vc.null_space()))
}

/// `Ṡ = ⟨F^fr, v⟩ / (∂L/∂S)`.
pub fn entropy_rate(model: &dyn ThermoModel, x: &Phase) -> Result<f64> {
    check_dims(model, x)?;
    temperature(model, x)?;
    Ok(model.friction(x).dot(&x.v) / model.dl_ds(x))
}

/// `p = ∂L/∂v`.
pub fn partial_legendre(model: &dyn ThermoModel, x: &Phase) -> DVector<f64> {
    model.dl_dv(x)
}

/// Convective part of `ṗ`: everything in `d/dt(∂L/∂v)` except `M v̇`.
pub fn momentum_drift(model: &dyn ThermoModel, x: &Phase, sdot: f64, ndot: f64) -> DVector<f64> {
    model.momentum_q_jacobian(x) * &x.v
        + model.momentum_s_derivative(x) * sdot
        + model.momentum_n_derivative(x) * ndot
        + model.momentum_t_derivative(x)
}

/// `ṗ = M v̇ + (∂²L/∂v∂q) v + (∂²L/∂v∂S) Ṡ + (∂²L/∂v∂N) Ṅ + ∂²L/∂v∂t`.
pub fn momentum_rate(
    model: &dyn ThermoModel,
    x: &Phase,
    vdot: &DVector<f64>,
    sdot: f64,
    ndot: f64,
) -> DVector<f64> {
    model.mass_matrix(x) * vdot + momentum_drift(model, x, sdot, ndot)
}

/// Velocity-free force balance `∂L/∂q + F^fr + F^ext − (ṗ − M v̇)`.
pub fn balance_force(model: &dyn ThermoModel, x: &Phase, sdot: f64, ndot: f64) -> DVector<f64> {
    model.dl_dq(x) + model.friction(x) + model.external_force(x)
        - momentum_drift(model, x, sdot, ndot)
}

/// Orthonormal basis of `ker M ∩ ker ω`: velocity directions carrying no
/// inertia. Empty for models that are regular on the constraint distribution.
pub fn degenerate_directions(model: &dyn ThermoModel, x: &Phase, omega: &DMatrix<f64>) -> DMatrix<f64> {
    let g = linalg::null_space(omega);
    if g.ncols() == 0 {
        return g;
    }
    let mg = model.mass_matrix(x) * &g;
    let y = linalg::null_space(&mg);
    if y.ncols() == 0 {
        return DMatrix::zeros(model.dof(), 0);
    }
    linalg::column_basis(&(g * y))
}

/// `(Ṡ, Ṅ)` as a function of the phase point.
pub type RateFn<'a> = &'a dyn Fn(&Phase) -> Result<(f64, f64)>;

pub(crate) fn closed_rates(model: &dyn ThermoModel) -> impl Fn(&Phase) -> Result<(f64, f64)> + '_ {
    move |x| Ok((entropy_rate(model, x)?, 0.0))
}

/// Algebraic force balance `Zᵀ f = 0` along the inertia-free directions `Z`.
pub(crate) struct AlgebraicBalance<'a> {
    pub model: &'a dyn ThermoModel,
    pub directions: DMatrix<f64>,
    pub rates: RateFn<'a>,
}

const ALGEBRAIC_STEP: f64 = 6e-6;

impl AlgebraicBalance<'_> {
    pub fn residual(&self, x: &Phase) -> Result<DVector<f64>> {
        let (sdot, ndot) = (self.rates)(x)?;
        Ok(self.directions.tr_mul(&balance_force(self.model, x, sdot, ndot)))
    }

    /// `∂(Zᵀ f)/∂v` with `Z` frozen.
    pub fn velocity_jacobian(&self, x: &Phase) -> Result<DMatrix<f64>> {
        if let Some(jac) = self.model.force_jacobians(x) {
            return Ok(self.directions.tr_mul(&jac.dv));
        }
        let n = x.v.len();
        let k = self.directions.ncols();
        let mut jac = DMatrix::zeros(k, n);
        for j in 0..n {
            let step = fd::scaled_step(x.v[j], ALGEBRAIC_STEP);
            let plus = self.residual(&fd::shifted(x, Slot::V(j), step))?;
            let minus = self.residual(&fd::shifted(x, Slot::V(j), -step))?;
            jac.set_column(j, &((plus - minus) / (2.0 * step)));
        }
        Ok(jac)
    }

    /// Part of `d/dt (Zᵀ f)` not proportional to `v̇`.
    pub fn drift(&self, x: &Phase) -> Result<DVector<f64>> {
        let (sdot, ndot) = (self.rates)(x)?;
        if let Some(jac) = self.model.force_jacobians(x) {
            let total = jac.dq * &x.v + jac.ds * sdot + jac.dn * ndot + jac.dt;
            return Ok(self.directions.tr_mul(&total));
        }
        let scale = x
            .q
            .amax()
            .max(x.entropy.abs())
            .max(x.moles.abs())
            .max(x.t.abs())
            .max(1.0);
        let speed = x.v.amax().max(sdot.abs()).max(ndot.abs()).max(1.0);
        let h = ALGEBRAIC_STEP * scale / speed;
        let advance = |sign: f64| {
            let mut y = x.clone();
            y.t += sign * h;
            y.q += sign * h * &x.v;
            y.entropy += sign * h * sdot;
            y.moles += sign * h * ndot;
            y
        };
        let plus = self.residual(&advance(1.0))?;
        let minus = self.residual(&advance(-1.0))?;
        Ok((plus - minus) / (2.0 * h))
    }
}

const LEGENDRE_MAX_ITER: usize = 50;
const LEGENDRE_RTOL: f64 = 1e-10;

/// Solves `∂L/∂v(q, v, S) = p` for `v` by Newton's method.
///
/// `base` supplies `(t, q, S, N)`; its velocity is ignored. When the mass
/// matrix is singular the fiber of the Legendre map is cut down by the
/// constraints `ω v = 0` and the algebraic force balance along the
/// inertia-free directions, which fixes `v` uniquely for admissible momenta.
pub fn inverse_legendre(model: &dyn ThermoModel, base: &Phase, p: &DVector<f64>) -> Result<DVector<f64>> {
    check_dims(model, base)?;
    let n = model.dof();
    if p.len() != n {
        return Err(Error::dim("inverse_legendre p", n, p.len()));
    }
    let tol = LEGENDRE_RTOL * (1.0 + p.norm());
    let mut x = base.with_velocity(DVector::zeros(n));
    let regular = linalg::numerical_rank(&model.mass_matrix(&x)) == n;

    let omega;
    let rates = closed_rates(model);
    let balance;
    if regular {
        omega = DMatrix::zeros(0, n);
        balance = None;
    } else {
        omega = constraint_matrix(model, &x)?;
        balance = Some(AlgebraicBalance {
            model,
            directions: degenerate_directions(model, &x, &omega),
            rates: &rates,
        });
    }

    let residual = |x: &Phase| -> Result<DVector<f64>> {
        let momentum = model.dl_dv(x) - p;
        let Some(balance) = &balance else {
            return Ok(momentum);
        };
        let alg = balance.residual(x)?;
        let mut r = DVector::zeros(n + omega.nrows() + alg.len());
        r.rows_mut(0, n).copy_from(&momentum);
        r.rows_mut(n, omega.nrows()).copy_from(&(&omega * &x.v));
        r.rows_mut(n + omega.nrows(), alg.len()).copy_from(&alg);
        Ok(r)
    };
    let jacobian = |x: &Phase| -> Result<DMatrix<f64>> {
        let mass = model.mass_matrix(x);
        let Some(balance) = &balance else {
            return Ok(mass);
        };
        let alg = balance.velocity_jacobian(x)?;
        let mut j = DMatrix::zeros(n + omega.nrows() + alg.nrows(), n);
        j.rows_mut(0, n).copy_from(&mass);
        j.rows_mut(n, omega.nrows()).copy_from(&omega);
        j.rows_mut(n + omega.nrows(), alg.nrows()).copy_from(&alg);
        Ok(j)
    };

    let mut r = residual(&x)?;
    let mut iterations = 0;
    while r.norm() > tol {
        if iterations == LEGENDRE_MAX_ITER {
            return Err(Error::LegendreInversion {
                iterations,
                residual: r.norm(),
            });
        }
        iterations += 1;
        let j = jacobian(&x)?;
        let step = if regular {
            j.lu().solve(&r)
        } else {
            Some(linalg::svd(&j).solve(&r, 1e-14))
        }
        .ok_or(Error::LegendreInversion {
            iterations,
            residual: r.norm(),
        })?;
        // Backtrack on the residual norm.
        let mut lambda = 1.0;
        loop {
            let trial = x.with_velocity(&x.v - lambda * &step);
            let rt = residual(&trial)?;
            if rt.norm() < r.norm() || lambda < 1e-4 {
                x = trial;
                r = rt;
                break;
            }
            lambda *= 0.5;
        }
    }
    if !regular && (model.dl_dv(&x) - p).norm() > tol {
        return Err(Error::LegendreInversion {
            iterations,
            residual: (model.dl_dv(&x) - p).norm(),
        });
    }
    Ok(x.v)
}

/// Per-block relative errors between analytic derivatives and central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientReport {
    pub dl_dq: f64,
    pub dl_dv: f64,
    pub dl_ds: f64,
    pub dl_dn: f64,
    pub mass_matrix: f64,
}

impl GradientReport {
    pub fn max(&self) -> f64 {
        self.blocks().iter().map(|b| b.1).fold(0.0, f64::max)
    }

    pub fn blocks(&self) -> [(&'static str, f64); 5] {
        [
            ("dl_dq", self.dl_dq),
            ("dl_dv", self.dl_dv),
            ("dl_ds", self.dl_ds),
            ("dl_dn", self.dl_dn),
            ("mass_matrix", self.mass_matrix),
        ]
    }

    /// First block whose error exceeds `threshold`, as an error.
    pub fn require(&self, threshold: f64) -> Result<()> {
        for (block, error) in self.blocks() {
            if !(error <= threshold) {
                return Err(Error::GradientCheck {
                    block,
                    error,
                    threshold,
                });
            }
        }
        Ok(())
    }
}

fn relative_error(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) -> f64 {
    if analytic.shape() != numeric.shape() {
        return f64::INFINITY;
    }
    if analytic.is_empty() {
        return 0.0;
    }
    (analytic - numeric).amax() / numeric.amax().max(1e-10)
}

fn as_matrix(v: DVector<f64>) -> DMatrix<f64> {
    let n = v.len();
    DMatrix::from_column_slice(n, 1, v.as_slice())
}

/// Compares the model's derivative hooks with central differences of step `h`
/// (relative to each coordinate's magnitude).
pub fn gradient_check(model: &dyn ThermoModel, x: &Phase, h: f64) -> GradientReport {
    let n = model.dof();
    let l = |y: &Phase| model.lagrangian(y);
    let fd_q = DVector::from_fn(n, |i, _| fd::central_scalar(x, Slot::Q(i), h, l));
    let fd_v = DVector::from_fn(n, |i, _| fd::central_scalar(x, Slot::V(i), h, l));
    let fd_s = fd::central_scalar(x, Slot::Entropy, h, l);
    let fd_n = fd::central_scalar(x, Slot::Moles, h, l);
    let fd_m = fd::block_jacobian(x, Slot::V, h, n, |y| model.dl_dv(y));
    let scalar = |a: f64, b: f64| relative_error(&DMatrix::from_element(1, 1, a), &DMatrix::from_element(1, 1, b));
    GradientReport {
        dl_dq: relative_error(&as_matrix(model.dl_dq(x)), &as_matrix(fd_q)),
        dl_dv: relative_error(&as_matrix(model.dl_dv(x)), &as_matrix(fd_v)),
        dl_ds: scalar(model.dl_ds(x), fd_s),
        dl_dn: scalar(model.dl_dn(x), fd_n),
        mass_matrix: relative_error(&model.mass_matrix(x), &fd_m),
    }
}

/// Default step for [`gradient_check`] at registration.
pub const REGISTRATION_STEP: f64 = 1e-5;
/// Pass threshold for [`gradient_check`] at registration.
pub const REGISTRATION_THRESHOLD: f64 = 1e-4;

/// Registration check: the model's hooks must agree with finite differences at `probe`.
pub fn register_check(model: &dyn ThermoModel, probe: &Phase) -> Result<()> {
    check_dims(model, probe)?;
    gradient_check(model, probe, REGISTRATION_STEP).require(REGISTRATION_THRESHOLD)
}
