//! Operation-level examples checked against closed forms and brute force.

mod common;

use approx::assert_relative_eq;
use flockcert::certificates::{decay_rate, sup_influence, Certifier};
use flockcert::diagnostics::{diameter_position, diameter_velocity, initial_extremes, window_diameter, window_diameter_accepted, Diagnostics, DiagnosticsConfig};
use flockcert::integrator::IntegrateError;
use flockcert::model::{AgentHistory, DelayLaw, HistorySpec, InfluenceSpec, PathLaw};
use flockcert::{integrate, presets, PhaseState, Tolerances, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn certifier(traj: &Trajectory) -> Certifier<'_> {
    Certifier::new(traj, &Tolerances::default()).unwrap()
}

#[test]
fn velocity_diameter_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let v: Vec<f64> = (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let s = PhaseState { t: 0.0, agents: 4, dim: 2, x: vec![0.0; 8], v: v.clone() };
        let pts: Vec<Vec<f64>> = v.chunks(2).map(|c| c.to_vec()).collect();
        assert_eq!(diameter_velocity(&s), common::brute_diameter(&pts));
    }
}

#[test]
fn closed_form_dv_between_mesh_points() {
    let traj = integrate(&presets::closed_form_undelayed()).unwrap();
    for t in [0.0, 0.0137, 0.5, 1.25, 3.3, 5.0] {
        let s = traj.query(t).unwrap();
        assert_relative_eq!(diameter_velocity(&s), common::closed_form_dv(t), max_relative = 1e-9);
        // d_X = e^{−2t} for x = (0, 1), v = (1, −1)
        assert_relative_eq!(diameter_position(&s), (-2.0 * t).exp(), max_relative = 1e-9);
    }
}

#[test]
fn window_examples() {
    let cfg = DiagnosticsConfig::default();
    let flocked = integrate(&presets::flocked()).unwrap();
    assert_eq!(window_diameter(&flocked, 0, 17, &[]).unwrap().dn, 0.0);

    let cf = integrate(&presets::closed_form_undelayed()).unwrap();
    assert_eq!(window_diameter(&cf, 0, 17, &[]).unwrap().dn, 2.0);
    let w1 = window_diameter_accepted(&cf, 1, &cfg, 2.0, &[]).unwrap();
    assert!(w1.accepted);
    assert_relative_eq!(w1.dn, 2.0, max_relative = 1e-12);
    // v = ±e^{−2t}, so on [τ̄, 2τ̄] the spread peaks at s = t = τ̄
    let tb = cf.tau_bar();
    let w2 = window_diameter_accepted(&cf, 2, &cfg, 2.0, &[]).unwrap();
    assert_relative_eq!(w2.dn, 2.0 * (-2.0 * tb).exp(), max_relative = 1e-9);

    assert!(window_diameter(&cf, 9, 17, &[]).is_err());
    assert!(window_diameter(&cf, 1, 1, &[]).is_err());
}

#[test]
fn initial_extremes_examples() {
    let cfg = DiagnosticsConfig::default();
    let flocked = integrate(&presets::flocked()).unwrap();
    let ex = initial_extremes(&flocked, &cfg).unwrap();
    assert_eq!(ex.d0, 0.0);
    assert_relative_eq!(ex.r_v0, (0.6f64 * 0.6 + 0.3 * 0.3).sqrt(), max_relative = 1e-15);

    let cf = integrate(&presets::closed_form_undelayed()).unwrap();
    let ex = initial_extremes(&cf, &cfg).unwrap();
    assert_eq!((ex.d0, ex.r_v0, ex.m_x0), (2.0, 1.0, 1.0));
}

#[test]
fn linear_history_extremes_sit_at_endpoints() {
    let cfg = DiagnosticsConfig::default();
    let spec = presets::default_delayed();
    let traj = integrate(&spec).unwrap();
    let ex = initial_extremes(&traj, &cfg).unwrap();
    let tb = spec.tau_bar;
    // |a + s·b| is convex in s, so its maximum over [−τ̄, 0] is at an end
    let mut rv: f64 = 0.0;
    let mut mx: f64 = 0.0;
    for i in 0..spec.agents {
        for s in [-tb, 0.0] {
            let (x, v) = spec.eval_history(i, s).unwrap();
            rv = rv.max(v.iter().map(|a| a * a).sum::<f64>().sqrt());
            mx = mx.max(x.iter().map(|a| a * a).sum::<f64>().sqrt());
        }
    }
    assert_relative_eq!(ex.r_v0, rv, max_relative = 1e-12);
    assert_relative_eq!(ex.m_x0, mx, max_relative = 1e-12);
}

#[test]
fn phi_branches_for_unit_weights() {
    for (tb, expected) in [(1.0, (-2.0f64).exp()), (3.0, (-6.0f64).exp() / 3.0)] {
        let spec = common::unit_weight_scenario(2, tb, 0.01);
        let traj = integrate(&spec).unwrap();
        let diag = Diagnostics::new(&traj, &DiagnosticsConfig::default()).unwrap();
        for t in [-tb, 0.0, tb, 5.0 * tb] {
            assert_eq!(diag.psi_floor(t), 1.0);
            assert_relative_eq!(diag.phi(t), expected, max_relative = 1e-15);
        }
    }
}

#[test]
fn psi_floor_against_dense_grid() {
    let traj = integrate(&presets::non_monotone_psi()).unwrap();
    let diag = Diagnostics::new(&traj, &DiagnosticsConfig::default()).unwrap();
    let psi = &traj.scenario().influence;
    let mut prev = f64::INFINITY;
    for k in 0..=40 {
        let t = -1.0 + 9.0 * k as f64 / 40.0;
        let r = diag.radius(t);
        let n = 10_000;
        let grid_min = (0..=n).map(|j| psi.eval(r * j as f64 / n as f64).unwrap()).fold(f64::INFINITY, f64::min);
        let got = diag.psi_floor(t);
        assert!(got <= grid_min + 1e-15 && grid_min - got < 1e-6, "t = {t}: {got} vs {grid_min}");
        let phi = diag.phi(t);
        assert!(phi <= prev && phi > 0.0);
        prev = phi;
    }
}

#[test]
fn monotone_psi_floor_is_right_endpoint() {
    let traj = integrate(&presets::default_delayed()).unwrap();
    let diag = Diagnostics::new(&traj, &DiagnosticsConfig::default()).unwrap();
    for t in [-1.0, 0.0, 2.5, 8.0] {
        let r = diag.radius(t);
        assert_eq!(diag.psi_floor(t), traj.scenario().influence.eval(r).unwrap());
    }
}

#[test]
fn sup_influence_examples() {
    assert_eq!(sup_influence(&InfluenceSpec::Constant { c: 1.0 }), 1.0);
    assert_eq!(sup_influence(&InfluenceSpec::CuckerSmale { k0: 2.0, beta: 0.5 }), 2.0);
    assert_eq!(sup_influence(&InfluenceSpec::Oscillating { base: 0.5, amp: 0.25, freq: 1.0 }), 0.75);
}

#[test]
fn envelope_unit_weights_closed_form() {
    let spec = common::unit_weight_scenario(2, 1.0, 0.01);
    let traj = integrate(&spec).unwrap();
    let cert = certifier(&traj);
    let d0 = cert.constants().d0;
    assert_eq!(d0, 2.0);
    for t in [-1.0, 0.0, 1.3, 2.0] {
        assert_eq!(cert.envelope(t), d0);
    }
    assert_relative_eq!(cert.envelope(3.0), d0 * (1.0 - (-3.0f64).exp()).cbrt(), max_relative = 1e-12);
    let mut prev = f64::INFINITY;
    for k in 0..=900 {
        let e = cert.envelope(-1.0 + 9.0 * k as f64 / 900.0);
        assert!(e <= prev);
        prev = e;
    }
}

#[test]
fn envelope_is_continuous_at_joints() {
    for spec in presets::all() {
        let traj = integrate(&spec).unwrap();
        let cert = certifier(&traj);
        let tb = spec.tau_bar;
        let d0 = cert.constants().d0;
        for n in 2..8 {
            let t = n as f64 * tb;
            let left = cert.envelope(t - 1e-12 * tb);
            let right = cert.envelope(t + 1e-12 * tb);
            assert!((left - right).abs() <= 1e-10 * d0 + 1e-300, "{} n={n}: {left} vs {right}", spec.name);
            assert_relative_eq!(cert.envelope(t), cert.envelope_anchor(n), max_relative = 1e-14);
        }
    }
}

#[test]
fn lyapunov_unit_weights_closed_form() {
    let tb = 1.0;
    let spec = common::unit_weight_scenario(2, tb, 0.01);
    let traj = integrate(&spec).unwrap();
    let cert = certifier(&traj);
    let g = (-tb).exp().min((-2.0 * tb).exp() / tb);
    // R_V⁰ = 1, M_X⁰ = 1, d_X ≤ 1 with d_X(0) = 1
    let a = 2.0 * tb + 4.0 + 1.0;
    for t in [0.0, 2.0, 3.7, 8.0] {
        let expected = cert.envelope(t) + (-tb).exp() / 3.0 * g * a;
        assert_relative_eq!(cert.lyapunov(t), expected, max_relative = 1e-12);
    }
    let c = cert.constants();
    assert_relative_eq!(c.d_star, 3.0 * tb.exp() * c.lyapunov_2tau / g, max_relative = 1e-10);
}

#[test]
fn flocked_dstar_is_current_radius() {
    let traj = integrate(&presets::flocked()).unwrap();
    let cert = certifier(&traj);
    let c = cert.constants();
    let dx0 = diameter_position(&traj.query(0.0).unwrap());
    assert_relative_eq!(c.d_star, 2.0 * c.tau_bar * c.r_v0 + 4.0 * c.m_x0 + dx0, max_relative = 1e-12);
    let l0 = cert.lyapunov(0.0);
    for t in [1.0, 2.0, 5.5, 8.0] {
        assert_relative_eq!(cert.lyapunov(t), l0, max_relative = 1e-14);
    }
}

#[test]
fn dstar_converges_to_fine_trapezoid_oracle() {
    for spec in [presets::default_delayed(), presets::large_delay()] {
        let traj = integrate(&spec).unwrap();
        let cert = certifier(&traj);
        let c = *cert.constants();
        let a2 = c.radius_offset + cert.diagnostics().dx_runmax(2.0 * c.tau_bar);
        let coarse = common::trapezoid_scan_dstar(&spec.influence, c.tau_bar, c.d0, a2, 10_000);
        let fine = common::trapezoid_scan_dstar(&spec.influence, c.tau_bar, c.d0, a2, 1_000_000);
        assert!((c.d_star - coarse).abs() / coarse <= 1e-6);
        assert!((c.d_star - fine).abs() / fine <= 1e-9, "{}: {} vs {}", spec.name, c.d_star, fine);
    }
}

#[test]
fn decay_rate_examples() {
    let c = decay_rate(2f64.ln(), 1.0, 0.25).unwrap();
    assert_relative_eq!(c, 0.044_510_464_208_174_21, max_relative = 1e-14);
    let small = decay_rate(1.0, 1.0, 1e-12).unwrap();
    assert!(small > 0.0 && small < 1e-12);
    assert!(decay_rate(1.0, 1.0, 1.0).is_err());
}

#[test]
fn decay_rate_does_not_see_agent_count() {
    let rates: Vec<f64> = [2, 4, 8]
        .iter()
        .map(|&n| {
            let traj = integrate(&common::unit_weight_scenario(n, 1.0, 0.01)).unwrap();
            let c = *certifier(&traj).constants();
            assert_eq!(c.phi_star, (-2.0f64).exp());
            c.c
        })
        .collect();
    assert!(rates.iter().all(|&c| c == rates[0]));
    assert_eq!(rates[0], decay_rate(1.0, 1.0, (-2.0f64).exp()).unwrap());
}

#[test]
fn measured_rate_exceeds_certified_rate() {
    let traj = integrate(&presets::closed_form_undelayed()).unwrap();
    let rep = certifier(&traj).report();
    assert!(rep.all_pass(), "{:?}", rep.failing());
    assert!(rep.constants.c < 2.0);
}

#[test]
fn flocked_passes_trivially() {
    let traj = integrate(&presets::flocked()).unwrap();
    let rep = certifier(&traj).report();
    assert!(rep.all_pass());
    for c in &rep.checks {
        assert!(c.margin.unwrap() >= 0.0, "{}", c.name);
    }
}

#[test]
fn short_horizon_is_partial() {
    let mut spec = presets::default_delayed();
    spec.horizon_windows = Some(3.0);
    let traj = integrate(&spec.validate().unwrap()).unwrap();
    let rep = certifier(&traj).report();
    assert!(rep.meta.partial);
    let full = certifier(&integrate(&presets::default_delayed()).unwrap()).report();
    assert!(!full.meta.partial);
}

#[test]
fn queries_outside_the_horizon_are_rejected() {
    let traj = integrate(&presets::constant_delay_linear()).unwrap();
    assert!(matches!(traj.query(-0.26), Err(IntegrateError::OutOfRange { .. })));
    assert!(matches!(traj.query(2.5), Err(IntegrateError::OutOfRange { .. })));
    assert!(traj.query(-0.25).is_ok() && traj.query(2.0).is_ok());
}

#[test]
fn stiff_explicit_steps_report_blow_up() {
    let history = vec![
        AgentHistory { position: PathLaw::Constant { value: vec![0.0] }, velocity: PathLaw::Constant { value: vec![1.0] } },
        AgentHistory { position: PathLaw::Constant { value: vec![1.0] }, velocity: PathLaw::Constant { value: vec![-1.0] } },
    ];
    let spec = flockcert::ScenarioSpec {
        name: "stiff".into(),
        agents: 2,
        dim: 1,
        tau_bar: 0.1,
        horizon: Some(20.0),
        horizon_windows: None,
        dt: 0.1,
        stride: 1,
        r_max: None,
        influence: InfluenceSpec::Constant { c: 1000.0 },
        delay: DelayLaw::Constant { tau0: 0.0 },
        history: HistorySpec::new(history),
    };
    match integrate(&spec) {
        Err(IntegrateError::BlowUp { last_good_time, .. }) => assert!(last_good_time < 20.0),
        other => panic!("expected blow-up, got {other:?}"),
    }
}

#[test]
fn undelayed_run_matches_one_rk4_step() {
    // one classical RK4 step of w' = −2w from w = 2
    let mut spec = presets::closed_form_undelayed();
    spec.dt = 0.1;
    spec.horizon = Some(0.1);
    spec.horizon_windows = None;
    let traj = integrate(&spec.validate().unwrap()).unwrap();
    let z: f64 = -0.2;
    let amp = 1.0 + z + z * z / 2.0 + z.powi(3) / 6.0 + z.powi(4) / 24.0;
    let v = traj.query(0.1).unwrap().v;
    assert_relative_eq!(v[0] - v[1], 2.0 * amp, max_relative = 1e-15);
}
