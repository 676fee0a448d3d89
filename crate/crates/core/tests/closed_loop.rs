use nalgebra::Vector3;

use softdock::attitude::Quaternion;
use softdock::dynamics::TargetAttitudeState;
use softdock::metrics::{compute_metrics, MetricOptions};
use softdock::orbit::MU_EARTH;
use softdock::sim::{run_closed_loop, ScenarioConfig};

const POSITION: [&str; 3] = ["px", "py", "pz"];
const ATTITUDE: [&str; 3] = ["q1", "q2", "q3"];

#[test]
fn faster_poles_settle_sooner() {
    let base = ScenarioConfig::reference();
    let mut fast = base.clone();
    fast.controller.poles = base.controller.poles.scaled(2.0).unwrap();
    let m0 = compute_metrics(&run_closed_loop(&base).unwrap(), &MetricOptions::default());
    let m1 = compute_metrics(&run_closed_loop(&fast).unwrap(), &MetricOptions::default());
    for names in [&POSITION[..], &ATTITUDE[..]] {
        let (t0, t1) = (m0.settling_time(names).unwrap(), m1.settling_time(names).unwrap());
        assert!(t1 < t0, "{names:?}: {t1} vs {t0}");
    }
}

#[test]
fn closed_loop_stability_witness() {
    let rec = run_closed_loop(&ScenarioConfig::reference()).unwrap();
    assert!(rec.witness.all_passed);
    assert!(rec.witness.max_real <= -0.1 + 1e-6);
    assert!(rec.witness.sup_norm.is_finite());
    assert_eq!(rec.witness.samples, 801);
    for c in &rec.controls {
        assert!(c.residual < 1e-8);
        assert!(!c.held);
    }
}

#[test]
fn records_are_deterministic() {
    let mut cfg = ScenarioConfig::reference();
    cfg.duration = 10.0;
    cfg.disturbance_fraction = 0.1;
    cfg.seed = 42;
    assert_eq!(run_closed_loop(&cfg).unwrap(), run_closed_loop(&cfg).unwrap());
    let mut other = cfg.clone();
    other.seed = 43;
    assert_ne!(run_closed_loop(&cfg).unwrap().samples, run_closed_loop(&other).unwrap().samples);
}

#[test]
fn record_grid_is_uniform_and_metrics_recompute() {
    let mut cfg = ScenarioConfig::reference();
    cfg.duration = 3.0;
    let rec = run_closed_loop(&cfg).unwrap();
    assert_eq!(rec.samples.len(), 301);
    for (i, s) in rec.samples.iter().enumerate() {
        assert!((s.t - 0.01 * i as f64).abs() < 1e-12);
    }
    let a = compute_metrics(&rec, &MetricOptions::default());
    let b = compute_metrics(&rec.clone(), &MetricOptions::default());
    assert_eq!(a, b);
}

#[test]
fn docks_with_spinning_target_on_elliptic_orbit() {
    let mut cfg = ScenarioConfig::reference();
    cfg.orbit.semi_major_axis = 7_000_000.0;
    cfg.orbit.eccentricity = 0.05;
    cfg.orbit.mu = MU_EARTH;
    cfg.target_motion = TargetAttitudeState {
        q_i_tb: Quaternion::from_axis_angle(&Vector3::new(0.0, 1.0, 1.0), 0.4),
        w_tb: Vector3::new(0.0, 0.0, 0.01),
    };
    let rec = run_closed_loop(&cfg).unwrap();
    let m = compute_metrics(&rec, &MetricOptions::default());
    assert!(!m.failed);
    assert!(m.terminal_position_norm < 0.05 && m.terminal_attitude_norm < 0.01);
    assert!(m.max_eigenvalue_error < 1e-6);
}

#[test]
fn verbatim_stiffness_still_docks() {
    let mut cfg = ScenarioConfig::reference();
    cfg.model.verbatim_stiffness = true;
    let m = compute_metrics(&run_closed_loop(&cfg).unwrap(), &MetricOptions::default());
    assert!(!m.failed);
    assert!(m.terminal_position_norm < 0.05);
}

#[test]
fn pole_hold_reuses_the_first_gain() {
    let mut cfg = ScenarioConfig::reference();
    cfg.duration = 5.0;
    cfg.controller.pole_hold = true;
    let rec = run_closed_loop(&cfg).unwrap();
    assert!(!rec.controls[0].held);
    assert!(rec.controls[1..].iter().all(|c| c.held));
}

#[test]
fn thrust_limit_clips_applied_force_only() {
    let mut cfg = ScenarioConfig::reference();
    cfg.duration = 20.0;
    cfg.thrust_limit = Some(5.0);
    let rec = run_closed_loop(&cfg).unwrap();
    // the record keeps the commanded value, which exceeds the clip early on
    assert!(rec.samples.iter().any(|s| s.f_a.amax() > 5.0));
    let free = run_closed_loop(&ScenarioConfig { thrust_limit: None, ..cfg }).unwrap();
    assert_ne!(rec.samples[20].x, free.samples[20].x);
}

#[test]
fn singular_attitude_ends_run_with_partial_record() {
    let mut cfg = ScenarioConfig::reference();
    cfg.initial_state.w = Vector3::new(20.0, 0.0, 0.0);
    cfg.thrust_limit = Some(1e-6);
    let rec = run_closed_loop(&cfg).unwrap();
    assert!(rec.failed(), "expected the attitude to leave the reduced ball");
    assert!(!rec.samples.is_empty());
    let m = compute_metrics(&rec, &MetricOptions::default());
    assert!(m.failed);
    assert!(m.final_time < cfg.duration);
}
