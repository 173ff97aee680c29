//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use dirac_thermo::builtin::{
    build_lcr, build_open_piston, build_piston, build_piston_cylinder, IdealGas, LcrParams,
    OpenPistonParams, PistonCylinderParams, PortParams, SourceParams,
};
use dirac_thermo::dynamics::{
    cotangent_residual, energy_balance_report, simulate, CotangentPoint, CotangentRate,
    SimOptions, Trajectory,
};
use dirac_thermo::linalg::{certify_dirac, induced_dirac, PresymplecticForm, Subspace};
use dirac_thermo::model::{gradient_check, Phase, ThermoModel};
use dirac_thermo::open::{internal_entropy_production, open_rhs};
use dirac_thermo::open_simulate;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RUNTIME_LIMIT: Duration = Duration::from_secs(5);

struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn line(id: &'static str, pass: bool, detail: String) -> Line {
    Line { id, pass, detail }
}

fn rk4_run(model: &dyn ThermoModel, x0: &Phase, dt: f64, projection: bool) -> Trajectory {
    let options = SimOptions {
        projection,
        ..SimOptions::default()
    };
    simulate(model, x0, (0.0, 1.0), dt, &options).expect("valid run configuration")
}

fn relative_energy_drift(traj: &Trajectory) -> f64 {
    let e0 = traj.samples[0].energy;
    traj.samples
        .iter()
        .map(|s| (s.energy - e0).abs() / e0.abs())
        .fold(0.0, f64::max)
}

fn random_form(rng: &mut ChaCha8Rng, n: usize) -> PresymplecticForm {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let mut m = &a - a.transpose();
    // Occasionally drop rank to exercise presymplectic forms.
    if rng.gen_bool(0.3) {
        let k = rng.gen_range(0..n);
        m.row_mut(k).fill(0.0);
        m.column_mut(k).fill(0.0);
    }
    PresymplecticForm::new(m).expect("antisymmetric")
}

fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Subspace {
    let k = rng.gen_range(0..=n);
    let vectors = DMatrix::from_fn(n, k.max(1), |_, _| rng.gen_range(-1.0..1.0));
    if k == 0 {
        Subspace::zero(n)
    } else {
        Subspace::span(&vectors).expect("finite")
    }
}

fn criterion_1() -> Line {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for n in [2, 4, 6, 10] {
        for _ in 0..100 {
            let delta = random_distribution(&mut rng, n);
            let omega = random_form(&mut rng, n);
            let d = induced_dirac(&delta, &omega).expect("induced structure");
            let cert = certify_dirac(&d, 1e-10);
            worst = worst.max(cert.max_pairing);
            if !cert.is_dirac {
                failures += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    line(
        "1 dirac certification",
        failures == 0 && elapsed < RUNTIME_LIMIT,
        format!("failures={failures}/400 max_pairing={worst:.3e} runtime={elapsed:.2?}"),
    )
}

fn criterion_2_3_4() -> Vec<Line> {
    let pc = PistonCylinderParams::default();
    let piston = build_piston_cylinder(&pc).unwrap();
    let lp = LcrParams::default();
    let lcr = build_lcr(&lp).unwrap();

    let start = Instant::now();
    let pt = rk4_run(&piston, &pc.default_initial(), 1e-3, true);
    let piston_time = start.elapsed();
    let start = Instant::now();
    let lt = rk4_run(&lcr, &lp.default_initial(), 1e-3, true);
    let lcr_time = start.elapsed();

    let mut lines = Vec::new();
    let (pe, le) = (relative_energy_drift(&pt), relative_energy_drift(&lt));
    lines.push(line(
        "2 first law closed",
        pt.is_complete()
            && lt.is_complete()
            && pe <= 1e-8
            && le <= 1e-8
            && piston_time < RUNTIME_LIMIT
            && lcr_time < RUNTIME_LIMIT,
        format!(
            "piston rel dE={pe:.3e} ({piston_time:.2?}) lcr rel dE={le:.3e} ({lcr_time:.2?})"
        ),
    ));

    let (ps, ls) = (pt.min_entropy_increment(), lt.min_entropy_increment());
    lines.push(line(
        "3 second law closed",
        ps >= -1e-12 && ls >= -1e-12,
        format!("min dS piston={ps:.3e} lcr={ls:.3e}"),
    ));

    let cot = |model: &dyn ThermoModel, traj: &Trajectory| {
        traj.samples
            .iter()
            .map(|s| {
                let rate = s.rate(model);
                cotangent_residual(
                    model,
                    &CotangentPoint::from_pontryagin(&s.point),
                    &CotangentRate::from_pontryagin(&rate),
                    &s.phase(),
                    s.sdot,
                )
                .expect("cotangent residual")
            })
            .fold(0.0, f64::max)
    };
    let (pd, ld) = (pt.max_dirac_residual(), lt.max_dirac_residual());
    let (pc_res, lc_res) = (cot(&piston, &pt), cot(&lcr, &lt));
    lines.push(line(
        "4 dirac membership",
        pd <= 1e-8 && ld <= 1e-8 && pc_res <= 1e-8 && lc_res <= 1e-8,
        format!(
            "dirac piston={pd:.3e} lcr={ld:.3e} cotangent piston={pc_res:.3e} lcr={lc_res:.3e}"
        ),
    ));
    lines
}

/// Independent reference for the circuit in the reduced variables
/// `(q_L, q_C, f_L, S)` with `f_R = q_C/(RC)`.
///
/// `inductor_sign = +1` reproduces the displayed law `L f_L' = V + q_C/C`;
/// `−1` is the law implied by Kirchhoff's current law, `L f_L' = V − q_C/C`.
fn lcr_oracle(p: &LcrParams, inductor_sign: f64, steps: usize, t_end: f64) -> Vec<[f64; 4]> {
    let v_src = p.voltage.clone();
    let field = |t: f64, y: &[f64; 4]| -> [f64; 4] {
        let f_r = y[1] / (p.resistance * p.capacitance);
        let temperature = p.t0 * ((y[3] - p.s0) / p.heat_capacity).exp();
        [
            y[2],
            y[2] - f_r,
            (v_src.value(t) + inductor_sign * y[1] / p.capacitance) / p.inductance,
            p.resistance * f_r * f_r / temperature,
        ]
    };
    let x0 = p.default_initial();
    let mut y = [x0.q[0], x0.q[1], x0.v[0], x0.entropy];
    let h = t_end / steps as f64;
    let mut out = vec![y];
    for k in 0..steps {
        let t = k as f64 * h;
        let add = |a: &[f64; 4], b: &[f64; 4], s: f64| std::array::from_fn(|i| a[i] + s * b[i]);
        let k1 = field(t, &y);
        let k2 = field(t + 0.5 * h, &add(&y, &k1, 0.5 * h));
        let k3 = field(t + 0.5 * h, &add(&y, &k2, 0.5 * h));
        let k4 = field(t + h, &add(&y, &k3, h));
        y = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        out.push(y);
    }
    out
}

/// Sup-norm over samples of `|(q_L, q_C, f_L, f_R, S)_engine − oracle|`,
/// where the oracle grid is `stride` times finer than the engine grid.
fn lcr_gap(p: &LcrParams, traj: &Trajectory, oracle: &[[f64; 4]], stride: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, s) in traj.samples.iter().enumerate() {
        let o = oracle[k * stride];
        let f_r = o[1] / (p.resistance * p.capacitance);
        let gaps = [
            s.point.q[0] - o[0],
            s.point.q[1] - o[1],
            s.point.v[0] - o[2],
            s.point.v[3] - f_r,
            s.point.entropy - o[3],
        ];
        worst = gaps.iter().fold(worst, |w, g| w.max(g.abs()));
    }
    worst
}

fn criterion_5() -> Vec<Line> {
    let p = LcrParams::default();
    let lcr = build_lcr(&p).unwrap();
    let start = Instant::now();
    let traj = rk4_run(&lcr, &p.default_initial(), 1e-3, true);
    let displayed = lcr_gap(&p, &traj, &lcr_oracle(&p, 1.0, 1000, 1.0), 1);
    let elapsed = start.elapsed();
    let kcl = lcr_gap(&p, &traj, &lcr_oracle(&p, -1.0, 1000, 1.0), 1);
    vec![
        line(
            "5 lcr oracle equivalence",
            traj.is_complete() && displayed <= 1e-8 && elapsed < RUNTIME_LIMIT,
            format!("sup gap to displayed equations={displayed:.3e} runtime={elapsed:.2?}"),
        ),
        line(
            "5-kcl lcr oracle equivalence",
            traj.is_complete() && kcl <= 1e-8,
            format!("sup gap to Kirchhoff-consistent equations={kcl:.3e}"),
        ),
    ]
}

fn criterion_6() -> Line {
    let pc = PistonCylinderParams::default();
    let piston = build_piston_cylinder(&pc).unwrap();
    let on = rk4_run(&piston, &pc.default_initial(), 1e-3, true);
    let off = rk4_run(&piston, &pc.default_initial(), 1e-3, false);
    let (r_on, r_off) = (on.max_constraint_residual(), off.max_constraint_residual());
    line(
        "6 constraint preservation",
        on.is_complete() && off.is_complete() && r_on <= 1e-10 && r_off <= 1e-6,
        format!("projection on={r_on:.3e} off={r_off:.3e}"),
    )
}

fn criterion_7() -> Line {
    let params = OpenPistonParams::default();
    let model = build_open_piston(&params).unwrap();
    let gas: IdealGas = params.gas;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst, mut min_i) = (0.0_f64, f64::INFINITY);
    for _ in 0..1000 {
        let x = params.random_admissible_state(&mut rng);
        let sdot = open_rhs(&model, &x).unwrap().sdot;
        // Fluxes and production recomputed from the gas law and flux laws.
        let volume = params.area * x.q[0];
        let t = gas.temperature(volume, x.entropy, x.moles);
        let mu = gas.du_dn(volume, x.entropy, x.moles);
        let mut production = params.r * x.v[0] * x.v[0] / t;
        let mut transfer = 0.0;
        for port in &params.ports {
            let j = port.lambda * (port.mu - mu);
            let js = port.sigma * (port.temperature - t);
            production += (j * (port.mu - mu) + js * (port.temperature - t)) / t;
            transfer += js;
        }
        for source in &params.sources {
            let js = source.kappa * (source.temperature - t);
            production += js * (source.temperature - t) / t;
            transfer += js;
        }
        let engine_i = internal_entropy_production(&model, &x).unwrap();
        worst = worst.max((sdot - production - transfer).abs());
        worst = worst.max((engine_i - production).abs());
        min_i = min_i.min(engine_i);
    }
    line(
        "7 open entropy decomposition",
        worst <= 1e-12 && min_i >= 0.0,
        format!("max |S' - I - J_S|={worst:.3e} min I={min_i:.3e}"),
    )
}

fn criterion_8() -> Line {
    let params = OpenPistonParams::default();
    let model = build_open_piston(&params).unwrap();
    let traj =
        open_simulate(&model, &params.default_initial(), (0.0, 1.0), 1e-3, &SimOptions::default())
            .unwrap();
    let (first, last) = (&traj.samples[0], traj.last());
    let defect = ((last.energy - first.energy) - (last.work - first.work)).abs();
    let scale = 1.0 + first.energy.abs().max(last.energy.abs());
    let per_step = energy_balance_report(&traj).max_defect;
    line(
        "8 open first law",
        traj.is_complete() && defect <= 1e-8 * scale,
        format!("|dE - int P|={defect:.3e} bound={:.3e} max per step={per_step:.3e}", 1e-8 * scale),
    )
}

fn criterion_9() -> Line {
    let params = OpenPistonParams {
        ports: vec![PortParams {
            mu: 6500.0,
            temperature: 350.0,
            lambda: 0.0,
            sigma: 0.0,
        }],
        sources: vec![SourceParams {
            temperature: 400.0,
            kappa: 0.0,
        }],
        ..OpenPistonParams::default()
    };
    let open = build_open_piston(&params).unwrap();
    let closed = build_piston(&params.piston()).unwrap();
    let x0 = params.default_initial();
    let options = SimOptions::default();
    let a = open_simulate(&open, &x0, (0.0, 1.0), 1e-3, &options).unwrap();
    let b = simulate(&closed, &x0, (0.0, 1.0), 1e-3, &options).unwrap();
    let mismatches = a
        .samples
        .iter()
        .zip(&b.samples)
        .filter(|(s, c)| {
            s.t != c.t
                || s.point.q != c.point.q
                || s.point.v != c.point.v
                || s.point.entropy != c.point.entropy
                || s.point.moles != c.point.moles
        })
        .count();
    line(
        "9 closed-limit equivalence",
        a.is_complete() && a.samples.len() == b.samples.len() && mismatches == 0,
        format!("samples={} bitwise mismatches={mismatches}", a.samples.len()),
    )
}

fn criterion_10() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let pc = PistonCylinderParams::default();
    let lp = LcrParams::default();
    let op = OpenPistonParams::default();
    let piston = build_piston_cylinder(&pc).unwrap();
    let lcr = build_lcr(&lp).unwrap();
    let open = build_piston(&op.piston()).unwrap();
    let mut worst = [0.0_f64; 3];
    for _ in 0..100 {
        let cases: [(&dyn ThermoModel, Phase); 3] = [
            (&piston, pc.random_admissible_state(&mut rng)),
            (&lcr, lp.random_admissible_state(&mut rng)),
            (&open, op.random_admissible_state(&mut rng)),
        ];
        for (i, (model, x)) in cases.iter().enumerate() {
            worst[i] = worst[i].max(gradient_check(*model, x, 1e-5).max());
        }
    }
    line(
        "10 gradient checks",
        worst.iter().all(|&w| w <= 1e-6),
        format!(
            "max rel error piston_cylinder={:.3e} lcr={:.3e} open_piston={:.3e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn criterion_11() -> Vec<Line> {
    let p = LcrParams::default();
    let lcr = build_lcr(&p).unwrap();
    const FINE: usize = 128;
    let reference = |sign: f64| lcr_oracle(&p, sign, 500 * FINE, 1.0);
    let (displayed, kcl) = (reference(1.0), reference(-1.0));
    let mut errs = Vec::new();
    for (dt, coarse_steps) in [(2e-3, 500), (1e-3, 1000), (5e-4, 2000)] {
        let traj = rk4_run(&lcr, &p.default_initial(), dt, true);
        let stride = 500 * FINE / coarse_steps;
        errs.push((
            lcr_gap(&p, &traj, &displayed, stride),
            lcr_gap(&p, &traj, &kcl, stride),
        ));
    }
    let ratios = |pick: fn(&(f64, f64)) -> f64| {
        [pick(&errs[0]) / pick(&errs[1]), pick(&errs[1]) / pick(&errs[2])]
    };
    let (rd, rk) = (ratios(|e| e.0), ratios(|e| e.1));
    let fmt = |r: [f64; 2], e: [f64; 3]| {
        format!(
            "errors={:.3e},{:.3e},{:.3e} ratios={:.2},{:.2}",
            e[0], e[1], e[2], r[0], r[1]
        )
    };
    vec![
        line(
            "11 scheme order",
            rd.iter().all(|&r| r >= 12.0),
            format!(
                "displayed equations: {}",
                fmt(rd, [errs[0].0, errs[1].0, errs[2].0])
            ),
        ),
        line(
            "11-kcl scheme order",
            rk.iter().all(|&r| r >= 12.0),
            format!(
                "Kirchhoff-consistent equations: {}",
                fmt(rk, [errs[0].1, errs[1].1, errs[2].1])
            ),
        ),
    ]
}

fn main() -> ExitCode {
    let mut lines = vec![criterion_1()];
    lines.extend(criterion_2_3_4());
    lines.extend(criterion_5());
    lines.push(criterion_6());
    lines.push(criterion_7());
    lines.push(criterion_8());
    lines.push(criterion_9());
    lines.push(criterion_10());
    lines.extend(criterion_11());
    let mut failed = 0;
    for l in &lines {
        println!("{} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.id, l.detail);
        failed += usize::from(!l.pass);
    }
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
