use super::*;
use crate::builtin::{build_piston_cylinder, PistonCylinderParams};
use crate::error::Error;
use crate::model::custom::CustomModel;
use crate::testing::{particle, phase, tied_pair};
use nalgebra::DMatrix;

/// `L = ½v² − U(S)` with `U = exp(S)` and `F^fr = −v`.
fn reservoir_mass() -> CustomModel {
    CustomModel::builder(1)
        .lagrangian(|x| 0.5 * x.v[0] * x.v[0] - x.entropy.exp())
        .dl_dq(|_| DVector::zeros(1))
        .dl_dv(|x| x.v.clone())
        .dl_ds(|x| -x.entropy.exp())
        .mass_matrix(|_| DMatrix::identity(1, 1))
        .friction(|x| -&x.v)
        .build_unchecked()
        .unwrap()
}

fn rate_at(model: &dyn ThermoModel, x: &Phase) -> (PontryaginPoint, PontryaginRate, DVector<f64>) {
    let sdot = entropy_rate(model, x).unwrap();
    let (vdot, mu, _) = assemble_kkt(model, x).unwrap().solve().unwrap();
    let point = PontryaginPoint::on_solution(model, x, sdot);
    let rate = PontryaginRate {
        q: x.v.clone(),
        entropy: sdot,
        v: vdot.clone(),
        w: 0.0,
        p: crate::model::momentum_rate(model, x, &vdot, sdot, 0.0),
        lambda: 0.0,
    };
    (point, rate, mu)
}

#[test]
fn entropy_rate_examples() {
    let model = particle(1.0, 100.0, 0.5, 0.0);
    assert!((entropy_rate(&model, &phase(&[0.0], &[2.0], 0.0)).unwrap() - 0.02).abs() < 1e-16);
    assert_eq!(entropy_rate(&model, &phase(&[0.0], &[0.0], 0.0)).unwrap(), 0.0);
    let reversible = particle(1.0, 100.0, 0.0, 0.0);
    assert_eq!(entropy_rate(&reversible, &phase(&[0.0], &[3.0], 0.0)).unwrap(), 0.0);
}

#[test]
fn kkt_free_particle() {
    let model = particle(1.0, 1.0, 0.0, 0.0);
    let kkt = assemble_kkt(&model, &phase(&[0.0], &[1.0], 0.0)).unwrap();
    let (vdot, mu, _) = kkt.solve().unwrap();
    assert_eq!(vdot[0], 0.0);
    assert_eq!(mu.len(), 0);
}

#[test]
fn kkt_tied_pair_hand_solution() {
    let model = tied_pair(1.0, [1.0, 0.0]);
    let x = phase(&[0.0, 0.0], &[0.0, 0.0], 0.0);
    let kkt = assemble_kkt(&model, &x).unwrap();
    assert_eq!(kkt.matrix.shape(), (3, 3));
    let (vdot, mu, _) = kkt.solve().unwrap();
    assert!((vdot - DVector::from_row_slice(&[0.5, 0.5])).amax() < 1e-14);
    assert!((mu[0] + 0.5).abs() < 1e-14);
}

#[test]
fn kkt_piston_balance_at_rest() {
    let params = PistonCylinderParams::default();
    let model = build_piston_cylinder(&params).unwrap();
    let x = params.default_initial();
    let (vdot, mu, _) = assemble_kkt(&model, &x).unwrap().solve().unwrap();
    let sdot = entropy_rate(&model, &x).unwrap();
    let res = multiplier_residual(&model, &x, &vdot, &mu, sdot, 0.0).unwrap();
    let f = crate::model::balance_force(&model, &x, sdot, 0.0);
    assert!(res.amax() <= 1e-10 * (1.0 + f.amax()), "{res}");
    assert!(mu[0].abs() > 0.0);
}

#[test]
fn step_free_particle() {
    let model = particle(1.0, 1.0, 0.0, 0.0);
    let x = phase(&[0.0], &[1.0], 0.5);
    let state = PontryaginPoint::on_solution(&model, &x, 0.0);
    let (next, mu, report) = step(&model, &state, 0.1, &SimOptions::default()).unwrap();
    assert!((next.q[0] - 0.1).abs() < 1e-15);
    assert_eq!(next.v[0], 1.0);
    assert_eq!(next.entropy, 0.5);
    assert_eq!(mu.len(), 0);
    assert!(report.accepted);
}

#[test]
fn step_conserves_energy_with_reservoir() {
    let model = reservoir_mass();
    let x = phase(&[0.0], &[1.0], 0.0);
    let before = 0.5 + 1.0;
    let state = PontryaginPoint::on_solution(&model, &x, entropy_rate(&model, &x).unwrap());
    let (next, _, _) = step(&model, &state, 1e-3, &SimOptions::default()).unwrap();
    let after = 0.5 * next.v[0] * next.v[0] + next.entropy.exp();
    assert!(next.v[0] < 1.0 && next.entropy > 0.0);
    assert!((after - before).abs() <= 1e-10 * before, "{:e}", after - before);
}

#[test]
fn step_projection_restores_constraint() {
    let model = tied_pair(1.0, [1.0, -0.3]);
    let x = phase(&[0.0, 0.0], &[0.7, 0.7], 0.0);
    let mut state = PontryaginPoint::on_solution(&model, &x, 0.0);
    for _ in 0..10 {
        state = step(&model, &state, 0.05, &SimOptions::default()).unwrap().0;
        assert!((state.v[0] - state.v[1]).abs() <= 1e-14);
    }
}

#[test]
fn step_rejects_bad_dt() {
    let model = particle(1.0, 1.0, 0.0, 0.0);
    let state = PontryaginPoint::on_solution(&model, &phase(&[0.0], &[1.0], 0.0), 0.0);
    for dt in [0.0, -1.0, f64::NAN] {
        assert!(matches!(
            step(&model, &state, dt, &SimOptions::default()),
            Err(Error::InvalidParameter { ref key, .. }) if key == "dt"
        ));
    }
}

#[test]
fn simulate_free_particle_is_exact() {
    let model = particle(1.0, 1.0, 0.0, 0.0);
    let traj = simulate(&model, &phase(&[0.25], &[1.5], 0.1), (0.0, 1.0), 1e-2, &SimOptions::default()).unwrap();
    assert!(traj.is_complete());
    assert_eq!(traj.samples.len(), 101);
    for s in &traj.samples {
        assert!((s.point.q[0] - 0.25 - 1.5 * s.t).abs() <= 1e-12);
        assert_eq!(s.point.entropy, 0.1);
    }
    let times = traj.times();
    assert!(times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn simulate_rejects_inconsistent_start() {
    let model = tied_pair(1.0, [0.0, 0.0]);
    let err = simulate(&model, &phase(&[0.0, 0.0], &[1.0, 0.0], 0.0), (0.0, 1.0), 1e-2, &SimOptions::default())
        .unwrap_err();
    assert!(matches!(err, Error::InconsistentInitialState { .. }));
}

#[test]
fn implicit_midpoint_tracks_rk4() {
    let model = reservoir_mass();
    let x = phase(&[0.0], &[1.0], 0.0);
    let rk4 = simulate(&model, &x, (0.0, 0.5), 1e-3, &SimOptions::default()).unwrap();
    let options = SimOptions {
        scheme: Scheme::ImplicitMidpoint,
        ..SimOptions::default()
    };
    let mid = simulate(&model, &x, (0.0, 0.5), 1e-3, &options).unwrap();
    assert!(mid.is_complete());
    assert!((rk4.last().point.v[0] - mid.last().point.v[0]).abs() < 1e-6);
    assert!(mid.min_entropy_increment() >= 0.0);
}

#[test]
fn dirac_residual_on_and_off_solution() {
    let model = particle(1.0, 100.0, 0.5, 0.0);
    let x = phase(&[0.0], &[2.0], 0.0);
    let (point, rate, mu) = rate_at(&model, &x);
    assert!(dirac_residual(&model, &point, &rate, Some(&mu)).unwrap() <= 1e-12);
    assert!(pontryagin_membership(&model, &point, &rate).unwrap() <= 1e-12);

    let mut bad = rate.clone();
    bad.p[0] += 0.1;
    assert!(dirac_residual(&model, &point, &bad, Some(&mu)).unwrap() >= 0.01);
    assert!(pontryagin_membership(&model, &point, &bad).unwrap() >= 1e-3);
}

#[test]
fn dirac_differential_example() {
    let model = CustomModel::builder(1)
        .lagrangian(|x| 0.5 * x.v[0] * x.v[0] - x.entropy)
        .dl_dq(|_| DVector::zeros(1))
        .dl_dv(|x| x.v.clone())
        .dl_ds(|_| -1.0)
        .mass_matrix(|_| DMatrix::identity(1, 1))
        .build_unchecked()
        .unwrap();
    let d = dirac_differential(&model, &phase(&[0.0], &[2.0], 0.0), 0.0);
    assert_eq!(d.base, DVector::from_row_slice(&[0.0, 0.0, 2.0, 0.0]));
    assert_eq!(d.covector, DVector::from_row_slice(&[0.0, 1.0, 2.0, 0.0]));
}

#[test]
fn cotangent_residual_rest_and_perturbed() {
    let rest = particle(1.0, 300.0, 0.0, 0.0);
    let x = phase(&[0.0], &[0.0], 0.0);
    let (point, rate, _) = rate_at(&rest, &x);
    let z = CotangentPoint::from_pontryagin(&point);
    let zdot = CotangentRate::from_pontryagin(&rate);
    assert_eq!(cotangent_residual(&rest, &z, &zdot, &x, 0.0).unwrap(), 0.0);

    let t = 100.0;
    let damped = particle(1.0, t, 0.5, 0.0);
    let x = phase(&[0.0], &[2.0], 0.0);
    let (point, rate, _) = rate_at(&damped, &x);
    let z = CotangentPoint::from_pontryagin(&point);
    let mut zdot = CotangentRate::from_pontryagin(&rate);
    assert!(cotangent_residual(&damped, &z, &zdot, &x, rate.entropy).unwrap() <= 1e-12);
    assert!(cotangent_membership(&damped, &z, &zdot, &x, rate.entropy).unwrap() <= 1e-12);
    zdot.entropy += 0.1;
    let r = cotangent_residual(&damped, &z, &zdot, &x, rate.entropy + 0.1).unwrap();
    assert!((r - t * 0.1).abs() <= 1e-9, "{r}");
}

#[test]
fn generalized_energy_on_solution() {
    let model = reservoir_mass();
    let x = phase(&[0.0], &[1.5], 0.2);
    let point = PontryaginPoint::on_solution(&model, &x, 0.0);
    let e = GeneralizedEnergy::new(&model);
    assert!((e.value(&point) - energy(&model, &x)).abs() < 1e-15);
    let d = e.differential(&point);
    assert_eq!(d.len(), 6);
    assert_eq!(d[2], 0.0);
}

#[test]
fn energy_balance_constant_force() {
    let model = particle(2.0, 1.0, 0.0, 3.0);
    let traj = simulate(&model, &phase(&[0.0], &[0.5], 0.0), (0.0, 1.0), 1e-3, &SimOptions::default()).unwrap();
    let report = energy_balance_report(&traj);
    assert_eq!(report.series.len(), traj.samples.len() - 1);
    assert!(report.max_defect <= 1e-12, "{:e}", report.max_defect);
    let s = traj.last();
    assert!((s.work - 3.0 * s.point.q[0]).abs() <= 1e-12);
}

#[test]
fn energy_balance_free_dissipation() {
    let model = reservoir_mass();
    let traj = simulate(&model, &phase(&[0.0], &[1.0], 0.0), (0.0, 1.0), 1e-3, &SimOptions::default()).unwrap();
    assert!(energy_balance_report(&traj).max_defect <= 1e-9);
}

#[test]
fn csv_layout() {
    assert_eq!(
        csv_header(2, 1, false).join(","),
        "t,q_1,q_2,v_1,v_2,S,p_1,p_2,mu_1,E,Sdot,dirac_residual,power_ext"
    );
    assert!(csv_header(1, 0, true).join(",").ends_with("power_ext,N,I,P_W,P_H,P_M,p_time"));

    let model = tied_pair(1.0, [0.0, 0.0]);
    let traj = simulate(&model, &phase(&[0.0, 0.0], &[1.0, 1.0], 0.0), (0.0, 0.01), 1e-3, &SimOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_csv(&traj, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), traj.samples.len() + 1);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 13));
    let q: f64 = lines.last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(q, traj.last().point.q[0]);
}
