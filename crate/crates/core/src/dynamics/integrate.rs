use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::kkt::{assemble_with_rates, Rates};
use super::residual::closed_sample_residual;
use super::{energy, PontryaginPoint, PontryaginRate};
use crate::error::{Error, Result};
use crate::model::{
    check_dims, closed_rates, constraint_matrix, degenerate_directions, momentum_rate,
    temperature, AlgebraicBalance, Phase, ThermoModel,
};
use crate::open::OpenSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Classical four-stage explicit Runge-Kutta.
    #[default]
    Rk4,
    /// Implicit midpoint rule solved by Newton's method.
    ImplicitMidpoint,
}

/// Acceptance thresholds for a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Bound on `|⟨ω(q), v⟩|` for the initial state and every accepted step.
    pub constraint: f64,
    /// Bound on the Dirac residual of every accepted step.
    pub dirac: f64,
    /// Relative Newton tolerance for implicit schemes.
    pub newton: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            constraint: 1e-6,
            dirac: 1e-6,
            newton: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub scheme: Scheme,
    /// Re-impose `⟨ω(q), v⟩ = 0` exactly after each step.
    pub projection: bool,
    pub tolerances: Tolerances,
    /// Number of times a failed step may be split in half.
    pub max_halvings: u32,
    pub max_newton_iterations: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::Rk4,
            projection: true,
            tolerances: Tolerances::default(),
            max_halvings: 3,
            max_newton_iterations: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub newton_iters: usize,
    pub kkt_condition_estimate: f64,
    pub accepted: bool,
    pub halvings: u32,
}

/// One stored point of a trajectory with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub point: PontryaginPoint,
    pub multipliers: DVector<f64>,
    pub energy: f64,
    pub sdot: f64,
    pub ndot: f64,
    pub vdot: DVector<f64>,
    /// `⟨ωʳ(q), v⟩`.
    pub constraint_residual: DVector<f64>,
    pub dirac_residual: f64,
    /// `⟨F^ext, v⟩`.
    pub power_ext: f64,
    /// Integral of the total supplied power since the start of the run.
    pub work: f64,
    pub report: StepReport,
    pub open: Option<OpenSample>,
}

impl Sample {
    pub fn phase(&self) -> Phase {
        self.point.phase()
    }

    /// `(q̇, Ṡ, v̇, Ẇ, ṗ, Λ̇)` at this sample, with `Ẇ = Λ̇ = 0`.
    pub fn rate(&self, model: &dyn ThermoModel) -> PontryaginRate {
        PontryaginRate {
            q: self.point.v.clone(),
            entropy: self.sdot,
            v: self.vdot.clone(),
            w: 0.0,
            p: momentum_rate(model, &self.phase(), &self.vdot, self.sdot, self.ndot),
            lambda: 0.0,
        }
    }
}

/// Where and why a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub t: f64,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dof: usize,
    pub constraints: usize,
    pub samples: Vec<Sample>,
    pub failure: Option<Failure>,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory holds the initial sample")
    }

    pub fn is_open(&self) -> bool {
        self.samples.first().is_some_and(|s| s.open.is_some())
    }

    pub fn max_dirac_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.dirac_residual).fold(0.0, f64::max)
    }

    pub fn max_constraint_residual(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.constraint_residual.amax())
            .fold(0.0, f64::max)
    }

    /// Smallest `S(tᵢ₊₁) − S(tᵢ)`; `+∞` for a single sample.
    pub fn min_entropy_increment(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[1].point.entropy - w[0].point.entropy)
            .fold(f64::INFINITY, f64::min)
    }
}

/// The pieces that distinguish closed from open evolution.
pub(crate) trait Flow: Sync {
    fn model(&self) -> &dyn ThermoModel;

    /// `(Ṡ, Ṅ)`.
    fn thermal_rates(&self, x: &Phase) -> Result<(f64, f64)>;

    /// Power supplied by the exterior.
    fn supplied_power(&self, x: &Phase) -> Result<f64>;

    fn residual(&self, x: &Phase, rates: &Rates) -> Result<f64>;

    fn open_sample(&self, x: &Phase, rates: &Rates) -> Result<Option<OpenSample>>;
}

struct ClosedFlow<'a> {
    model: &'a dyn ThermoModel,
}

impl Flow for ClosedFlow<'_> {
    fn model(&self) -> &dyn ThermoModel {
        self.model
    }

    fn thermal_rates(&self, x: &Phase) -> Result<(f64, f64)> {
        closed_rates(self.model)(x)
    }

    fn supplied_power(&self, x: &Phase) -> Result<f64> {
        Ok(self.model.external_force(x).dot(&x.v))
    }

    fn residual(&self, x: &Phase, rates: &Rates) -> Result<f64> {
        closed_sample_residual(self.model, x, rates)
    }

    fn open_sample(&self, _x: &Phase, _rates: &Rates) -> Result<Option<OpenSample>> {
        Ok(None)
    }
}

/// Accelerations, multipliers and thermal rates at `x`.
pub(crate) fn evaluate(flow: &dyn Flow, x: &Phase) -> Result<Rates> {
    let model = flow.model();
    let (sdot, ndot) = flow.thermal_rates(x)?;
    let rates = |y: &Phase| flow.thermal_rates(y);
    let kkt = assemble_with_rates(model, x, &rates, sdot, ndot)?;
    let (vdot, mu, condition) = kkt.solve()?;
    Ok(Rates {
        vdot,
        mu,
        sdot,
        ndot,
        condition,
    })
}

/// Packed state `[q, v, S, N, work]`.
fn pack(x: &Phase, work: f64) -> DVector<f64> {
    let n = x.q.len();
    let mut y = DVector::zeros(2 * n + 3);
    y.rows_mut(0, n).copy_from(&x.q);
    y.rows_mut(n, n).copy_from(&x.v);
    y[2 * n] = x.entropy;
    y[2 * n + 1] = x.moles;
    y[2 * n + 2] = work;
    y
}

fn unpack(t: f64, y: &DVector<f64>) -> (Phase, f64) {
    let n = (y.len() - 3) / 2;
    let x = Phase {
        t,
        q: y.rows(0, n).into_owned(),
        v: y.rows(n, n).into_owned(),
        entropy: y[2 * n],
        moles: y[2 * n + 1],
    };
    (x, y[2 * n + 2])
}

fn derivative(flow: &dyn Flow, x: &Phase, rates: &Rates) -> Result<DVector<f64>> {
    let n = x.q.len();
    let mut d = DVector::zeros(2 * n + 3);
    d.rows_mut(0, n).copy_from(&x.v);
    d.rows_mut(n, n).copy_from(&rates.vdot);
    d[2 * n] = rates.sdot;
    d[2 * n + 1] = rates.ndot;
    d[2 * n + 2] = flow.supplied_power(x)? - flow.model().dl_dt(x);
    Ok(d)
}

fn field(flow: &dyn Flow, t: f64, y: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let (x, _) = unpack(t, y);
    let rates = evaluate(flow, &x)?;
    Ok((derivative(flow, &x, &rates)?, rates.condition))
}

fn rk4(
    flow: &dyn Flow,
    t: f64,
    y: &DVector<f64>,
    k1: &DVector<f64>,
    h: f64,
) -> Result<(DVector<f64>, StepReport)> {
    let (k2, c2) = field(flow, t + 0.5 * h, &(y + 0.5 * h * k1))?;
    let (k3, c3) = field(flow, t + 0.5 * h, &(y + 0.5 * h * &k2))?;
    let (k4, c4) = field(flow, t + h, &(y + h * &k3))?;
    let y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    let report = StepReport {
        kkt_condition_estimate: c2.max(c3).max(c4),
        ..StepReport::default()
    };
    Ok((y_new, report))
}

const JACOBIAN_STEP: f64 = 1e-7;

fn implicit_midpoint(
    flow: &dyn Flow,
    t: f64,
    y: &DVector<f64>,
    k1: &DVector<f64>,
    h: f64,
    options: &SimOptions,
) -> Result<(DVector<f64>, StepReport)> {
    let dim = y.len();
    let tm = t + 0.5 * h;
    let mut next = y + h * k1;
    let mut condition: f64 = 0.0;
    let mut iterations = 0;
    loop {
        let mid = 0.5 * (y + &next);
        let (f, c) = field(flow, tm, &mid)?;
        condition = condition.max(c);
        let g = &next - y - h * &f;
        let scale = 1.0 + next.amax();
        if g.amax() <= options.tolerances.newton * scale {
            break;
        }
        if iterations == options.max_newton_iterations {
            return Err(Error::NewtonDivergence {
                iterations,
                residual: g.amax(),
            });
        }
        iterations += 1;
        let mut jac = DMatrix::identity(dim, dim);
        for j in 0..dim {
            let step = JACOBIAN_STEP * mid[j].abs().max(1.0);
            let mut shifted = mid.clone();
            shifted[j] += step;
            let (fj, _) = field(flow, tm, &shifted)?;
            let column = (fj - &f) * (-0.5 * h / step);
            let mut target = jac.column_mut(j);
            target += column;
        }
        let delta = jac.lu().solve(&g).ok_or(Error::NewtonDivergence {
            iterations,
            residual: g.amax(),
        })?;
        next -= delta;
    }
    let report = StepReport {
        newton_iters: iterations,
        kkt_condition_estimate: condition,
        ..StepReport::default()
    };
    Ok((next, report))
}

const PROJECTION_ITERATIONS: usize = 8;

/// Moves `v` to the nearest admissible velocity in the kinetic metric.
///
/// Regular models need one linear solve. Models with inertia-free directions
/// `Z` also enforce `Zᵀ f = 0`, using the metric `M + ZZᵀ`.
pub(crate) fn project(flow: &dyn Flow, x: &Phase) -> Result<Phase> {
    let model = flow.model();
    let n = model.dof();
    let omega = constraint_matrix(model, x)?;
    let m = omega.nrows();
    let z = degenerate_directions(model, x, &omega);
    if z.ncols() == 0 {
        if m == 0 {
            return Ok(x.clone());
        }
        let mut kkt = DMatrix::zeros(n + m, n + m);
        kkt.view_mut((0, 0), (n, n)).copy_from(&model.mass_matrix(x));
        kkt.view_mut((0, n), (n, m)).copy_from(&omega.transpose());
        kkt.view_mut((n, 0), (m, n)).copy_from(&omega);
        let mut rhs = DVector::zeros(n + m);
        rhs.rows_mut(n, m).copy_from(&(-(&omega * &x.v)));
        let sol = kkt.lu().solve(&rhs).ok_or(Error::KktSingular {
            condition: f64::INFINITY,
        })?;
        return Ok(x.with_velocity(&x.v + sol.rows(0, n)));
    }

    let rates = |y: &Phase| flow.thermal_rates(y);
    let balance = AlgebraicBalance {
        model,
        directions: z.clone(),
        rates: &rates,
    };
    let k = z.ncols();
    let metric = model.mass_matrix(x) + &z * z.transpose();
    let mut y = x.clone();
    let mut best = f64::INFINITY;
    for _ in 0..PROJECTION_ITERATIONS {
        let mut r = DVector::zeros(m + k);
        r.rows_mut(0, m).copy_from(&(&omega * &y.v));
        r.rows_mut(m, k).copy_from(&balance.residual(&y)?);
        let norm = r.amax();
        if norm >= best || norm == 0.0 {
            break;
        }
        best = norm;
        let mut a = DMatrix::zeros(m + k, n);
        a.rows_mut(0, m).copy_from(&omega);
        a.rows_mut(m, k).copy_from(&balance.velocity_jacobian(&y)?);
        let mut kkt = DMatrix::zeros(n + m + k, n + m + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&metric);
        kkt.view_mut((0, n), (n, m + k)).copy_from(&a.transpose());
        kkt.view_mut((n, 0), (m + k, n)).copy_from(&a);
        let mut rhs = DVector::zeros(n + m + k);
        rhs.rows_mut(n, m + k).copy_from(&(-r));
        let sol = kkt.lu().solve(&rhs).ok_or(Error::KktSingular {
            condition: f64::INFINITY,
        })?;
        y.v += sol.rows(0, n);
    }
    Ok(y)
}

fn sample(
    flow: &dyn Flow,
    x: &Phase,
    work: f64,
    rates: &Rates,
    report: StepReport,
) -> Result<Sample> {
    let model = flow.model();
    let omega = constraint_matrix(model, x)?;
    Ok(Sample {
        t: x.t,
        point: PontryaginPoint::on_solution(model, x, rates.sdot),
        multipliers: rates.mu.clone(),
        energy: energy(model, x),
        sdot: rates.sdot,
        ndot: rates.ndot,
        vdot: rates.vdot.clone(),
        constraint_residual: omega * &x.v,
        dirac_residual: flow.residual(x, rates)?,
        power_ext: model.external_force(x).dot(&x.v),
        work,
        report,
        open: flow.open_sample(x, rates)?,
    })
}

/// Advances by `h`, splitting into halves on failure.
fn advance(
    flow: &dyn Flow,
    t: f64,
    y: &DVector<f64>,
    k1: &DVector<f64>,
    h: f64,
    options: &SimOptions,
    halvings_left: u32,
) -> Result<(DVector<f64>, Rates, StepReport)> {
    match attempt(flow, t, y, k1, h, options) {
        Ok(done) => Ok(done),
        Err(err) if halvings_left == 0 => Err(err),
        Err(_) => {
            let half = 0.5 * h;
            let (ym, rm, r1) = advance(flow, t, y, k1, half, options, halvings_left - 1)?;
            let (xm, _) = unpack(t + half, &ym);
            let k1m = derivative(flow, &xm, &rm)?;
            let (yn, rn, r2) = advance(flow, t + half, &ym, &k1m, half, options, halvings_left - 1)?;
            let report = StepReport {
                newton_iters: r1.newton_iters + r2.newton_iters,
                kkt_condition_estimate: r1.kkt_condition_estimate.max(r2.kkt_condition_estimate),
                accepted: true,
                halvings: 1 + r1.halvings.max(r2.halvings),
            };
            Ok((yn, rn, report))
        }
    }
}

fn attempt(
    flow: &dyn Flow,
    t: f64,
    y: &DVector<f64>,
    k1: &DVector<f64>,
    h: f64,
    options: &SimOptions,
) -> Result<(DVector<f64>, Rates, StepReport)> {
    let (mut y_new, mut report) = match options.scheme {
        Scheme::Rk4 => rk4(flow, t, y, k1, h)?,
        Scheme::ImplicitMidpoint => implicit_midpoint(flow, t, y, k1, h, options)?,
    };
    if !y_new.iter().all(|c| c.is_finite()) {
        return Err(Error::NewtonDivergence {
            iterations: report.newton_iters,
            residual: f64::INFINITY,
        });
    }
    let (mut x, work) = unpack(t + h, &y_new);
    if options.projection {
        x = project(flow, &x)?;
        y_new = pack(&x, work);
    }
    temperature(flow.model(), &x)?;
    let rates = evaluate(flow, &x)?;
    let omega = constraint_matrix(flow.model(), &x)?;
    let violation = (omega * &x.v).amax();
    if !(violation <= options.tolerances.constraint) {
        return Err(Error::StepRejected {
            quantity: "constraint residual",
            value: violation,
            tolerance: options.tolerances.constraint,
        });
    }
    let residual = flow.residual(&x, &rates)?;
    if !(residual <= options.tolerances.dirac) {
        return Err(Error::StepRejected {
            quantity: "dirac residual",
            value: residual,
            tolerance: options.tolerances.dirac,
        });
    }
    report.accepted = true;
    report.kkt_condition_estimate = report.kkt_condition_estimate.max(rates.condition);
    Ok((y_new, rates, report))
}

fn validate_span(t_span: (f64, f64), dt: f64) -> Result<usize> {
    let (t0, t1) = t_span;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", "must be a positive finite number"));
    }
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::param("t_span", "must satisfy t0 < t1"));
    }
    if dt > (t1 - t0) * (1.0 + 1e-12) {
        return Err(Error::param("dt", "must not exceed t1 - t0"));
    }
    Ok(((t1 - t0) / dt - 1e-9).ceil().max(1.0) as usize)
}

/// Makes the initial state consistent: checks `|ω v|`, then projects.
pub(crate) fn initialize(flow: &dyn Flow, initial: &Phase, options: &SimOptions) -> Result<Phase> {
    let model = flow.model();
    check_dims(model, initial)?;
    temperature(model, initial)?;
    let omega = constraint_matrix(model, initial)?;
    let violation = (omega.clone() * &initial.v).amax();
    if violation > options.tolerances.constraint {
        return Err(Error::InconsistentInitialState {
            residual: violation,
            tolerance: options.tolerances.constraint,
        });
    }
    let degenerate = degenerate_directions(model, initial, &omega).ncols() > 0;
    if options.projection || degenerate {
        project(flow, initial)
    } else {
        Ok(initial.clone())
    }
}

pub(crate) fn run(
    flow: &dyn Flow,
    initial: &Phase,
    t_span: (f64, f64),
    dt: f64,
    options: &SimOptions,
) -> Result<Trajectory> {
    let steps = validate_span(t_span, dt)?;
    let model = flow.model();
    let x0 = initialize(flow, &initial.clone().at_time(t_span.0), options)?;
    let rates0 = evaluate(flow, &x0)?;
    let report0 = StepReport {
        kkt_condition_estimate: rates0.condition,
        accepted: true,
        ..StepReport::default()
    };
    let mut trajectory = Trajectory {
        dof: model.dof(),
        constraints: model.constraint_count(),
        samples: vec![sample(flow, &x0, 0.0, &rates0, report0)?],
        failure: None,
    };
    let mut y = pack(&x0, 0.0);
    let mut rates = rates0;
    let mut t = t_span.0;
    for i in 1..=steps {
        let t_next = if i == steps {
            t_span.1
        } else {
            t_span.0 + i as f64 * dt
        };
        let h = t_next - t;
        let (x, _) = unpack(t, &y);
        let outcome = derivative(flow, &x, &rates)
            .and_then(|k1| advance(flow, t, &y, &k1, h, options, options.max_halvings))
            .and_then(|(y_new, r, report)| {
                let (x_new, work) = unpack(t_next, &y_new);
                let s = sample(flow, &x_new, work, &r, report)?;
                Ok((y_new, r, s))
            });
        match outcome {
            Ok((y_new, r, s)) => {
                y = y_new;
                rates = r;
                t = t_next;
                trajectory.samples.push(s);
            }
            Err(error) => {
                trajectory.failure = Some(Failure { t, error });
                break;
            }
        }
    }
    Ok(trajectory)
}

/// Integrates the closed-system equations from `initial` over `t_span`.
///
/// Invalid input and inconsistent initial states are errors; a failure during
/// the run returns the partial trajectory with [`Trajectory::failure`] set.
pub fn simulate(
    model: &dyn ThermoModel,
    initial: &Phase,
    t_span: (f64, f64),
    dt: f64,
    options: &SimOptions,
) -> Result<Trajectory> {
    run(&ClosedFlow { model }, initial, t_span, dt, options)
}

/// Advances a consistent state by one step of size `dt`.
pub fn step(
    model: &dyn ThermoModel,
    state: &PontryaginPoint,
    dt: f64,
    options: &SimOptions,
) -> Result<(PontryaginPoint, DVector<f64>, StepReport)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", "must be a positive finite number"));
    }
    let flow = ClosedFlow { model };
    let x = state.phase();
    check_dims(model, &x)?;
    let rates = evaluate(&flow, &x)?;
    let y = pack(&x, 0.0);
    let k1 = derivative(&flow, &x, &rates)?;
    let (y_new, r, report) = advance(&flow, x.t, &y, &k1, dt, options, options.max_halvings)?;
    let (x_new, _) = unpack(x.t + dt, &y_new);
    Ok((PontryaginPoint::on_solution(model, &x_new, r.sdot), r.mu, report))
}
