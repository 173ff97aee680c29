//! The `check` subcommand: an invariant suite over random admissible states
//! and a short reference trajectory.

use dirac_thermo::builtin::Builtin;
use dirac_thermo::dynamics::{
    assemble_kkt, cotangent_dirac, cotangent_residual, energy_balance_report, entropy_rate,
    pontryagin_dirac, pontryagin_membership, CotangentPoint, CotangentRate, PontryaginPoint,
    PontryaginRate,
};
use dirac_thermo::linalg::certify_dirac;
use dirac_thermo::model::{gradient_check, momentum_rate, REGISTRATION_STEP};
use dirac_thermo::open::{internal_entropy_production, open_residual, open_rhs};
use dirac_thermo::{open_simulate, simulate, OpenModel, Phase, SimOptions, ThermoModel, Trajectory};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Number of random admissible states per pointwise check.
pub const RANDOM_STATES: usize = 20;
/// Length of the reference simulation.
pub const REFERENCE_HORIZON: f64 = 0.1;
pub const REFERENCE_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckTolerances {
    pub certification: f64,
    pub gradient: f64,
    pub membership: f64,
    pub decomposition: f64,
    pub dirac: f64,
    pub cotangent: f64,
    pub energy: f64,
    pub entropy: f64,
    pub constraint: f64,
}

impl Default for CheckTolerances {
    fn default() -> Self {
        Self {
            certification: 1e-10,
            gradient: 1e-6,
            membership: 1e-8,
            decomposition: 1e-12,
            dirac: 1e-8,
            cotangent: 1e-8,
            energy: 1e-8,
            entropy: 1e-14,
            constraint: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub worst_value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub model: String,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    pub overall: bool,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// What the suite runs against. For open systems `model` is the base of `open`.
pub struct Subject<'a> {
    pub name: String,
    pub model: &'a dyn ThermoModel,
    pub open: Option<&'a OpenModel>,
    pub initial: Phase,
    pub sampler: Box<dyn Fn(&mut ChaCha8Rng) -> Phase + 'a>,
}

struct Recorder {
    checks: Vec<CheckRecord>,
}

impl Recorder {
    /// Records `worst ≤ tolerance`; a failed evaluation counts as infinitely bad.
    fn push(&mut self, name: &str, worst: Result<f64, dirac_thermo::Error>, tolerance: f64) {
        let worst_value = worst.unwrap_or(f64::INFINITY);
        self.checks.push(CheckRecord {
            name: name.into(),
            passed: worst_value <= tolerance,
            worst_value,
            tolerance,
        });
    }
}

fn max_over<F>(states: &[Phase], f: F) -> Result<f64, dirac_thermo::Error>
where
    F: Fn(&Phase) -> Result<f64, dirac_thermo::Error>,
{
    let mut worst: f64 = 0.0;
    for x in states {
        let value = f(x)?;
        if value.is_nan() {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(value);
    }
    Ok(worst)
}

fn closed_rate(model: &dyn ThermoModel, x: &Phase) -> Result<(PontryaginPoint, PontryaginRate), dirac_thermo::Error> {
    let sdot = entropy_rate(model, x)?;
    let (vdot, _, _) = assemble_kkt(model, x)?.solve()?;
    let rate = PontryaginRate {
        q: x.v.clone(),
        entropy: sdot,
        p: momentum_rate(model, x, &vdot, sdot, 0.0),
        v: vdot,
        w: 0.0,
        lambda: 0.0,
    };
    Ok((PontryaginPoint::on_solution(model, x, sdot), rate))
}

pub fn check_subject(subject: &Subject<'_>, seed: u64, tol: &CheckTolerances) -> VerificationReport {
    let model = subject.model;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<Phase> = (0..RANDOM_STATES).map(|_| (subject.sampler)(&mut rng)).collect();
    let mut rec = Recorder { checks: Vec::new() };

    rec.push(
        "dirac_certification",
        max_over(&states, |x| {
            let sdot = match subject.open {
                Some(open) => open_rhs(open, x)?.sdot,
                None => entropy_rate(model, x)?,
            };
            let point = PontryaginPoint::on_solution(model, x, sdot);
            let mut worst: f64 = 0.0;
            for d in [pontryagin_dirac(model, &point)?, cotangent_dirac(model, x)?] {
                let cert = certify_dirac(&d, tol.certification);
                if !cert.dim_ok {
                    return Ok(f64::INFINITY);
                }
                worst = worst.max(cert.max_pairing);
            }
            Ok(worst)
        }),
        tol.certification,
    );

    rec.push(
        "gradient_check",
        max_over(&states, |x| Ok(gradient_check(model, x, REGISTRATION_STEP).max())),
        tol.gradient,
    );

    match subject.open {
        None => rec.push(
            "dirac_membership",
            max_over(&states, |x| {
                let (point, rate) = closed_rate(model, x)?;
                pontryagin_membership(model, &point, &rate)
            }),
            tol.membership,
        ),
        Some(open) => rec.push(
            "entropy_decomposition",
            max_over(&states, |x| {
                let sdot = open_rhs(open, x)?.sdot;
                let i = internal_entropy_production(open, x)?;
                let transfer = open.fluxes(x)?.entropy_transfer();
                Ok((sdot - i - transfer).abs() / (1.0 + sdot.abs()))
            }),
            tol.decomposition,
        ),
    }

    reference_checks(subject, tol, &mut rec);

    let overall = rec.checks.iter().all(|c| c.passed);
    VerificationReport {
        model: subject.name.clone(),
        seed,
        checks: rec.checks,
        overall,
    }
}

fn reference_checks(subject: &Subject<'_>, tol: &CheckTolerances, rec: &mut Recorder) {
    let model = subject.model;
    let t0 = subject.initial.t;
    let span = (t0, t0 + REFERENCE_HORIZON);
    let options = SimOptions::default();
    let run = match subject.open {
        Some(open) => open_simulate(open, &subject.initial, span, REFERENCE_DT, &options),
        None => simulate(model, &subject.initial, span, REFERENCE_DT, &options),
    };
    let traj = match run {
        Ok(t) => t,
        Err(e) => {
            for name in [
                "reference_simulation",
                "dirac_residual",
                balance_name(subject),
                "energy_balance",
                "second_law",
                "constraint",
            ] {
                rec.push(name, Err(e.clone()), 0.0);
            }
            return;
        }
    };
    rec.push("reference_simulation", Ok(span.1 - traj.last().t), 0.0);
    rec.push("dirac_residual", Ok(traj.max_dirac_residual()), tol.dirac);
    rec.push(balance_name(subject), balance_worst(subject, &traj), tol.cotangent);

    let scale = traj.samples.iter().map(|s| s.energy.abs()).fold(0.0, f64::max);
    rec.push(
        "energy_balance",
        Ok(energy_balance_report(&traj).max_defect / (1.0 + scale)),
        tol.energy,
    );

    let decrease = match subject.open {
        None => traj
            .samples
            .windows(2)
            .map(|w| w[0].point.entropy - w[1].point.entropy)
            .fold(0.0, f64::max),
        Some(_) => traj
            .samples
            .iter()
            .filter_map(|s| s.open.as_ref())
            .map(|o| -o.internal_entropy_production)
            .fold(0.0, f64::max),
    };
    rec.push("second_law", Ok(decrease), tol.entropy);
    rec.push("constraint", Ok(traj.max_constraint_residual()), tol.constraint);
}

fn balance_name(subject: &Subject<'_>) -> &'static str {
    if subject.open.is_some() {
        "open_residual"
    } else {
        "cotangent_residual"
    }
}

/// Cotangent form of the closed equations; the open balance for open systems.
fn balance_worst(subject: &Subject<'_>, traj: &Trajectory) -> Result<f64, dirac_thermo::Error> {
    let model = subject.model;
    let mut worst: f64 = 0.0;
    for s in &traj.samples {
        let x = s.phase();
        let value = match subject.open {
            Some(open) => open_residual(open, &x, &open_rhs(open, &x)?)?,
            None => {
                let rate = s.rate(model);
                let z = CotangentPoint::from_pontryagin(&s.point);
                let zdot = CotangentRate::from_pontryagin(&rate);
                cotangent_residual(model, &z, &zdot, &x, s.sdot)?
            }
        };
        worst = worst.max(value);
    }
    Ok(worst)
}

/// Runs the suite on a built-in model.
pub fn check_builtin(builtin: &Builtin, seed: u64, tol: &CheckTolerances) -> Result<VerificationReport, CliError> {
    let built = builtin.build().map_err(CliError::model)?;
    let subject = Subject {
        name: builtin.name().into(),
        model: built.base(),
        open: built.as_open(),
        initial: builtin.default_initial(),
        sampler: Box::new(|rng| builtin.random_admissible_state(rng)),
    };
    Ok(check_subject(&subject, seed, tol))
}
