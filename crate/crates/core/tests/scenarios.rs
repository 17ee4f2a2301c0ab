use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, TAU};

use thermolab::analysis::*;
use thermolab::cocycle::{propagate_z, riccati_w, ConstantProfile, SigmaCovector, RICCATI_CAP};
use thermolab::flow::{integrate_orbit, ExpJacobianProbe};
use thermolab::geometry::{Basis2, FourierField2, PhasePoint};
use thermolab::model::{GaugeSpec, IntensityModel, Thermostat};
use thermolab::ode::Tolerances;

fn s1() -> Thermostat {
    Thermostat::flat(IntensityModel::cos_mode(1, 1.0))
}

fn s2() -> Thermostat {
    Thermostat::flat(IntensityModel::cos_mode(2, 1.0))
}

fn s3() -> Thermostat {
    Thermostat::flat(
        IntensityModel::magnetic(FourierField2::from_terms([(1, 0, Basis2::CosCos, 0.1)]))
            .with_mode(2, FourierField2::constant(1.0), FourierField2::zero()),
    )
}

fn random_points(seed: u64, n: usize) -> Vec<PhasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| PhasePoint::new(rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU)))
        .collect()
}

/// Doubling schedule up to 1024 for the flat geodesic flow, whose finite-`t₀`
/// slopes approach the Green lines only like `1/t₀`.
fn long_schedule() -> Vec<f64> {
    (1..=10).map(|k| 2f64.powi(k)).collect()
}

fn tight() -> Tolerances {
    Tolerances::new(1e-12, 1e-14)
}

#[test]
fn detectors_agree_on_strong_magnetic_field() {
    let th = Thermostat::flat(IntensityModel::constant(2.0));
    for p in random_points(3, 4) {
        let orbit = integrate_orbit(&th, p, (0.0, 3.0), &tight()).unwrap();
        let jac = conjugate_report(&orbit, 3.0, 1e-9, Some(p)).unwrap();
        let exp = conjugate_report_exp(&th, p, 3.0, 1e-4, 1e-9, &tight()).unwrap();
        let (a, b) = (jac.time.unwrap(), exp.time.unwrap());
        assert!((a - FRAC_PI_2).abs() < 1e-3 && (a - b).abs() < 1e-3, "{a} {b}");
        assert_eq!(exp.detector, Detector::ExpFd);
    }
}

#[test]
fn unit_magnetic_field_realizes_the_unit_profile() {
    // κ̃ = λ² = 1 on the flat torus: conjugate time π for both detectors
    let th = Thermostat::flat(IntensityModel::constant(1.0));
    let p = PhasePoint::new(0.2, 0.4, 1.0);
    let orbit = integrate_orbit(&th, p, (0.0, 4.0), &tight()).unwrap();
    let a = first_conjugate_time(&orbit, 4.0, 1e-9).unwrap().unwrap();
    let b = first_conjugate_time(&ConstantProfile(1.0), 4.0, 1e-9).unwrap().unwrap();
    let c = conjugate_report_exp(&th, p, 4.0, 1e-4, 1e-9, &tight()).unwrap().time.unwrap();
    assert!((a - b).abs() < 1e-6 && (a - c).abs() < 1e-3);
}

#[test]
fn exp_jacobian_stays_away_from_zero_on_s2() {
    let th = s2();
    for p in random_points(11, 20) {
        let probe = ExpJacobianProbe::new(&th, p.x, p.y, p.theta, 40.0, 1e-5, &Tolerances::default()).unwrap();
        let min = (1..=800).map(|i| probe.normal(0.05 * i as f64).unwrap()).fold(f64::INFINITY, f64::min);
        assert!(min > 0.04, "{min}");
    }
}

#[test]
fn flat_geodesic_exponents_vanish() {
    let th = Thermostat::flat(IntensityModel::zero());
    let p = PhasePoint::new(0.3, 0.2, 1.0);
    for (x, y) in [(1.0, 0.0), (0.3, 0.7), (0.0, 1.0)] {
        let chi = lyapunov_exponent(&th, p, (GaugeSpec::Zero, x, y), 30.0, 1.0, &Tolerances::default()).unwrap();
        assert!(chi.abs() < 1e-2 * 15.0 && chi >= -1e-12, "{chi}");
    }
    let chi = lyapunov_exponent(&th, p, (GaugeSpec::Zero, 0.0, 1.0), 30.0, 1.0, &Tolerances::default()).unwrap();
    assert!(chi.abs() < 1e-2);
}

#[test]
fn s1_lines_at_the_invariant_circle() {
    let th = s1();
    let p = PhasePoint::new(0.7, 0.1, FRAC_PI_2);
    let (s, u) = green_slopes_at_point(&th, p, &GaugeSpec::thermostat(), &DEFAULT_SCHEDULE, DEFAULT_GREEN_TOL, &Tolerances::default()).unwrap();
    assert!((s.slope.unwrap() - u.slope.unwrap() - 1.0).abs() < 1e-6);
    // the covector x_c = 0 stays bounded and lies on the computed stable line
    assert!(s.slope.unwrap().abs() < 1e-8);
    assert!(s.z_log_derivatives.windows(2).all(|w| w[1].unwrap() >= w[0].unwrap()));
}

#[test]
fn stable_sequences_are_monotone_on_s3() {
    let th = s3();
    for p in random_points(5, 6) {
        for g in [GaugeSpec::Zero, GaugeSpec::damped(), GaugeSpec::thermostat()] {
            let (s, u) = green_slopes_at_point(&th, p, &g, &DEFAULT_SCHEDULE, DEFAULT_GREEN_TOL, &Tolerances::default()).unwrap();
            assert!(s.converged && u.converged);
            assert!(s.is_monotone() && u.is_monotone());
            assert!(!s.conjugate_flag && !u.conjugate_flag);
        }
    }
}

#[test]
fn z_times_zdot_is_nondecreasing_for_nonpositive_curvature() {
    let th = s2();
    for p in random_points(9, 5) {
        let orbit = integrate_orbit(&th, p, (0.0, 6.0), &tight()).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=120 {
            let t = 0.05 * i as f64;
            let (z, zd) = propagate_z(&orbit, 0.4, -0.9, t, &tight()).unwrap();
            // gauge V(λ)/2: p − V(λ)/2 = 0
            let w = zd * z;
            assert!(w >= prev - 1e-9);
            prev = w;
        }
    }
}

#[test]
fn green_w_solutions_respect_the_comparison_bound() {
    let th = s2();
    for p in random_points(13, 5) {
        let (s, u) = green_slopes_at_point(&th, p, &GaugeSpec::damped(), &DEFAULT_SCHEDULE, DEFAULT_GREEN_TOL, &Tolerances::default()).unwrap();
        for e in [s, u] {
            assert!(e.slope.unwrap().abs() <= 1.0 + 1e-6);
        }
    }
    for w0 in [-1.0, -0.5, 0.99] {
        let r = riccati_w(&ConstantProfile(-1.0), w0, 20.0, RICCATI_CAP, &tight()).unwrap();
        assert!(r.w.iter().all(|w| w.abs() <= 1.0 + 1e-6));
    }
}

#[test]
fn collapse_pairs_equal_exponents() {
    // flat geodesic flow: both Green lines are ℝψ_λ
    let th = Thermostat::flat(IntensityModel::zero());
    let p = PhasePoint::new(1.0, 2.0, 0.5);
    let orbit = integrate_orbit(&th, p, (-1024.0, 1024.0), &Tolerances::default()).unwrap();
    let s = green_slope(&orbit, Side::Stable, &GaugeSpec::Zero, &long_schedule(), DEFAULT_GREEN_TOL).unwrap();
    let u = green_slope(&orbit, Side::Unstable, &GaugeSpec::Zero, &long_schedule(), DEFAULT_GREEN_TOL).unwrap();
    assert!((s.slope.unwrap() - u.slope.unwrap()).abs() < 2e-3);
    let chi = |e: &GreenEstimate| lyapunov_on_orbit(&orbit, &e.line().unit_covector(), 30.0, 1.0).unwrap();
    assert!((chi(&s) - chi(&u)).abs() < 5e-2);
}

#[test]
fn transversality_examples() {
    let scan = transversality_scan(&s2(), [3, 3, 4], &GaugeSpec::damped(), &DEFAULT_SCHEDULE, DEFAULT_GREEN_TOL, &Tolerances::default()).unwrap();
    assert_eq!(scan.non_converged, 0);
    assert!((scan.min_gap.unwrap() - 2.0).abs() < 1e-6);
    assert!(scan.continuity_modulus < 1e-6);

    let flat = transversality_scan(
        &Thermostat::flat(IntensityModel::zero()),
        [2, 2, 2],
        &GaugeSpec::Zero,
        &DEFAULT_SCHEDULE,
        DEFAULT_GREEN_TOL,
        &Tolerances::default(),
    )
    .unwrap();
    // slopes ±1/32 at the end of the schedule, never converged
    assert_eq!(flat.non_converged, 8);
    assert!(flat.cells.iter().all(|c| c.gap().unwrap() < 0.07));
}

#[test]
fn riccati_residual_examples() {
    let tol = Tolerances::default();
    let o = integrate_orbit(&s2(), PhasePoint::new(0.1, 0.2, 0.3), (-1.0, 10.0), &tol).unwrap();
    let centers: Vec<f64> = (0..10).map(|i| i as f64).collect();
    assert!(riccati_residual_fn(&o, &GaugeSpec::damped(), |_| 1.0, &centers, FLOW_FD_STEP).unwrap() < 1e-6);
    let flat = Thermostat::flat(IntensityModel::zero());
    let o = integrate_orbit(&flat, PhasePoint::new(0.1, 0.2, 0.3), (-1.0, 10.0), &tol).unwrap();
    assert_eq!(riccati_residual_fn(&o, &GaugeSpec::Zero, |_| 0.0, &centers, FLOW_FD_STEP).unwrap(), 0.0);
    let o = integrate_orbit(&s1(), PhasePoint::new(0.1, 0.2, FRAC_PI_2), (-1.0, 10.0), &tol).unwrap();
    assert!(riccati_residual_fn(&o, &GaugeSpec::thermostat(), |_| -1.0, &centers, FLOW_FD_STEP).unwrap() < 1e-6);
}

#[test]
fn zero_gauge_synthesis_examples() {
    let tol = Tolerances::default();
    let centers: Vec<f64> = (0..10).map(|i| i as f64).collect();
    let flat = Thermostat::flat(IntensityModel::zero());
    let o = integrate_orbit(&flat, PhasePoint::new(0.1, 0.2, 0.3), (-1.0, 10.0), &tol).unwrap();
    let st = FlowStencil::new(centers.clone(), FLOW_FD_STEP);
    let zeros = vec![0.0; st.times().len()];
    assert_eq!(synthesize_zero_gauge(&o, &st, &zeros).unwrap(), 0.0);

    let o = integrate_orbit(&s1(), PhasePoint::new(0.1, 0.2, FRAC_PI_2), (-33.0, 42.0), &tol).unwrap();
    assert!(synthesize_zero_gauge_green(&o, &centers, &DEFAULT_SCHEDULE, DEFAULT_GREEN_TOL).unwrap() < 1e-4);

    let o = integrate_orbit(&s2(), PhasePoint::new(2.1, 0.2, 0.9), (-33.0, 53.0), &tol).unwrap();
    let centers: Vec<f64> = (0..=20).map(|i| i as f64).collect();
    assert!(synthesize_zero_gauge_green(&o, &centers, &DEFAULT_SCHEDULE, DEFAULT_GREEN_TOL).unwrap() < 1e-3);
}

#[test]
fn kappa_w_identity_on_s3_grid() {
    let samples = kappa_w_identity(&s3(), &uniform_grid(8, 8, 8), FLOW_FD_STEP, &DEFAULT_SCHEDULE, DEFAULT_GREEN_TOL, &Tolerances::default()).unwrap();
    let worst = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    assert!(worst < 1e-3, "{worst}");
    assert!(samples.iter().all(|s| s.kappa_w < 0.0));
}

#[test]
fn kappa_w_identity_examples() {
    let pts = random_points(17, 6);
    let s = kappa_w_identity(&s2(), &pts, FLOW_FD_STEP, &DEFAULT_SCHEDULE, DEFAULT_GREEN_TOL, &Tolerances::default()).unwrap();
    for k in &s {
        assert!((k.kappa_w + 1.0).abs() < 1e-6);
        assert!((k.stable - 1.0 - (2.0 * k.point.theta).sin()).abs() < 1e-6);
    }
    let flat = Thermostat::flat(IntensityModel::zero());
    let s = kappa_w_identity(&flat, &pts[..2], FLOW_FD_STEP, &long_schedule(), DEFAULT_GREEN_TOL, &Tolerances::default()).unwrap();
    assert!(s.iter().all(|k| k.residual < 1e-5 && k.kappa_w.abs() < 1e-5));
}

#[test]
fn flat_geodesic_flow_is_not_dominated() {
    let fit = domination_estimate(
        &Thermostat::flat(IntensityModel::zero()),
        &random_points(21, 4),
        20,
        &GaugeSpec::Zero,
        &long_schedule(),
        DEFAULT_GREEN_TOL,
        &Tolerances::default(),
    )
    .unwrap();
    assert!(fit.slope.abs() < 0.05, "{}", fit.slope);
}

#[test]
fn lyapunov_renormalization_interval_is_irrelevant() {
    let th = s3();
    let p = PhasePoint::new(0.4, 0.5, 0.6);
    let a = lyapunov_exponent(&th, p, (GaugeSpec::Zero, 0.3, 0.4), 20.0, 1.0, &Tolerances::default()).unwrap();
    let b = lyapunov_exponent(&th, p, (GaugeSpec::Zero, 0.3, 0.4), 20.0, 0.25, &Tolerances::default()).unwrap();
    assert!((a - b).abs() < 1e-8);
    let orbit = integrate_orbit(&th, p, (0.0, 20.0), &Tolerances::default()).unwrap();
    let xi = SigmaCovector::at_origin(&orbit, GaugeSpec::Zero, 0.3, 0.4);
    assert!((lyapunov_on_orbit(&orbit, &xi, 20.0, 2.0).unwrap() - a).abs() < 1e-8);
}
