use dirac_thermo::builtin::{build_piston_cylinder, Builtin, PistonCylinderParams, BUILTIN_NAMES};
use dirac_thermo::dynamics::{
    cotangent_residual, dirac_residual, energy_balance_report, pontryagin_membership, CotangentPoint,
    CotangentRate,
};
use dirac_thermo::{open_simulate, simulate, Scheme, SimOptions, Trajectory};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn run_dt(builtin: &Builtin, x: &dirac_thermo::Phase, t1: f64, dt: f64, options: &SimOptions) -> Trajectory {
    let built = builtin.build().unwrap();
    match built.as_open() {
        Some(open) => open_simulate(open, x, (0.0, t1), dt, options).unwrap(),
        None => simulate(built.base(), x, (0.0, t1), dt, options).unwrap(),
    }
}

fn run(builtin: &Builtin, x: &dirac_thermo::Phase, t1: f64, options: &SimOptions) -> Trajectory {
    run_dt(builtin, x, t1, 1e-3, options)
}

#[test]
fn builtins_satisfy_both_laws() {
    for name in BUILTIN_NAMES {
        let builtin = Builtin::from_name(name).unwrap();
        let traj = run(&builtin, &builtin.default_initial(), 0.5, &SimOptions::default());
        assert!(traj.is_complete(), "{name}: {:?}", traj.failure);
        let e = traj.samples.iter().map(|s| s.energy.abs()).fold(0.0, f64::max);
        assert!(energy_balance_report(&traj).max_defect <= 1e-8 * (1.0 + e), "{name}");
        assert!(traj.max_dirac_residual() <= 1e-8, "{name}");
        if !builtin.is_open() {
            assert!(traj.min_entropy_increment() >= -1e-15, "{name}");
        }
    }
}

#[test]
fn closed_builtins_are_members_in_every_formulation() {
    for name in ["piston_cylinder", "lcr"] {
        let builtin = Builtin::from_name(name).unwrap();
        let built = builtin.build().unwrap();
        let model = built.base();
        let traj = run(&builtin, &builtin.default_initial(), 0.2, &SimOptions::default());
        for s in traj.samples.iter().step_by(20) {
            let rate = s.rate(model);
            assert!(dirac_residual(model, &s.point, &rate, Some(&s.multipliers)).unwrap() <= 1e-8);
            assert!(pontryagin_membership(model, &s.point, &rate).unwrap() <= 1e-8);
            let z = CotangentPoint::from_pontryagin(&s.point);
            let zdot = CotangentRate::from_pontryagin(&rate);
            assert!(cotangent_residual(model, &z, &zdot, &s.phase(), s.sdot).unwrap() <= 1e-8, "{name}");
        }
    }
}

#[test]
fn implicit_midpoint_on_builtins() {
    let options = SimOptions {
        scheme: Scheme::ImplicitMidpoint,
        ..SimOptions::default()
    };
    for name in BUILTIN_NAMES {
        let builtin = Builtin::from_name(name).unwrap();
        let x = builtin.default_initial();
        let reference = run_dt(&builtin, &x, 0.2, 5e-4, &SimOptions::default());
        let error = |dt: f64| {
            let t = run_dt(&builtin, &x, 0.2, dt, &options);
            assert!(t.is_complete(), "{name}: {:?}", t.failure);
            assert!(t.last().report.newton_iters > 0);
            (&t.last().point.v - &reference.last().point.v).amax()
        };
        let ratio = error(2e-3) / error(1e-3);
        assert!((3.5..4.5).contains(&ratio), "{name}: ratio {ratio}");
    }
}

#[test]
fn reversible_piston_keeps_entropy() {
    let params = PistonCylinderParams {
        r: 0.0,
        ..Default::default()
    };
    let model = build_piston_cylinder(&params).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = params.random_admissible_state(&mut rng);
    let traj = simulate(&model, &x, (x.t, x.t + 0.3), 1e-3, &SimOptions::default()).unwrap();
    let s0 = traj.samples[0].point.entropy;
    assert!(traj.samples.iter().all(|s| s.point.entropy == s0 && s.sdot == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn random_starts_stay_on_the_structure(seed in any::<u64>(), which in 0usize..3) {
        let builtin = Builtin::from_name(BUILTIN_NAMES[which]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = builtin.random_admissible_state(&mut rng);
        let built = builtin.build().unwrap();
        let traj = match built.as_open() {
            Some(open) => open_simulate(open, &x, (x.t, x.t + 0.05), 1e-3, &SimOptions::default()).unwrap(),
            None => simulate(built.base(), &x, (x.t, x.t + 0.05), 1e-3, &SimOptions::default()).unwrap(),
        };
        prop_assert!(traj.is_complete());
        prop_assert!(traj.max_dirac_residual() <= 1e-8);
        prop_assert!(traj.max_constraint_residual() <= 1e-10);
    }
}
