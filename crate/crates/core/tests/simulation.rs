use qsmc::control::SlidingKind;
use qsmc::sim::{
    compute_metrics, parse_config, preset, run_scenario, scenario_from_config, write_csv, write_metrics_csv,
    ConfigError, ControllerKind, RunLog, SimError, METRICS_HEADER, RUNLOG_HEADER,
};

fn short(name: &str, duration: f64) -> qsmc::sim::Scenario {
    let mut sc = preset(name).unwrap();
    sc.duration = duration;
    sc
}

fn csv_of(log: &RunLog) -> String {
    let mut buf = Vec::new();
    write_csv(log, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn runs_are_deterministic() {
    for name in ["fig3", "fig4", "slew-flip"] {
        let sc = short(name, 1.0);
        let a = run_scenario(&sc).unwrap();
        let b = run_scenario(&sc).unwrap();
        assert_eq!(csv_of(&a), csv_of(&b), "{name}");
    }
}

#[test]
fn random_disturbance_depends_on_seed_only() {
    let text = "preset = fig3\ndisturbance.kind = random\ndisturbance.bound = 0.2\nsim.duration = 0.5\n";
    let mut map = parse_config(text).unwrap();
    let a = run_scenario(&scenario_from_config(&map).unwrap()).unwrap();
    let b = run_scenario(&scenario_from_config(&map).unwrap()).unwrap();
    assert_eq!(csv_of(&a), csv_of(&b));
    map.set("sim.seed", "7").unwrap();
    let c = run_scenario(&scenario_from_config(&map).unwrap()).unwrap();
    assert_ne!(csv_of(&a), csv_of(&c));
}

#[test]
fn csv_layout() {
    let log = run_scenario(&short("fig3", 0.01)).unwrap();
    let text = csv_of(&log);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(RUNLOG_HEADER));
    let cols = RUNLOG_HEADER.split(',').count();
    for line in lines {
        assert_eq!(line.split(',').count(), cols);
    }
    assert_eq!(text.lines().count(), log.rows.len() + 1);

    let mut sc = short("fig4", 0.01);
    sc.controller = ControllerKind::Adaptive;
    let log = run_scenario(&sc).unwrap();
    let text = csv_of(&log);
    assert!(text.lines().next().unwrap().ends_with(",a1,a2,a3,a4,a5,a6"));
    assert_eq!(text.lines().nth(1).unwrap().split(',').count(), cols + 6);
}

#[test]
fn empty_log_writes_header_only() {
    let mut log = run_scenario(&short("fig3", 0.01)).unwrap();
    log.rows.clear();
    assert_eq!(csv_of(&log), format!("{RUNLOG_HEADER}\n"));
    let mut buf = Vec::new();
    write_metrics_csv(&[], &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), format!("{METRICS_HEADER}\n"));
}

#[test]
fn logged_values_round_trip() {
    let log = run_scenario(&short("fig3", 0.05)).unwrap();
    let text = csv_of(&log);
    let last = text.lines().last().unwrap();
    let t: f64 = last.split(',').next().unwrap().parse().unwrap();
    assert_eq!(t, log.rows.last().unwrap().t);
}

#[test]
fn log_rows_are_capped() {
    let mut sc = short("kinematic", 30.0);
    sc.dt = 1e-3;
    let log = run_scenario(&sc).unwrap();
    assert!(log.rows.len() <= qsmc::sim::MAX_LOG_INTERVALS + 1);
    assert_eq!(log.decimation, 3);
}

#[test]
fn kinematic_flow_does_not_unwind() {
    let log = run_scenario(&preset("kinematic").unwrap()).unwrap();
    let m = compute_metrics(&log);
    assert!(m.unwinding_ratio <= 1.05, "{}", m.unwinding_ratio);
    assert!(m.settling_time.is_finite());
    assert_eq!(m.manifold_switches, 0);
}

#[test]
fn sign_flip_leaves_proposed_pd_untouched() {
    let flipped = run_scenario(&short("fig3", 4.0)).unwrap();
    let mut sc = short("fig3", 4.0);
    sc.flip_at = None;
    let plain = run_scenario(&sc).unwrap();
    let (a, b) = (flipped.rows.last().unwrap(), plain.rows.last().unwrap());
    assert!((a.torque - b.torque).amax() < 1e-9);
    assert!(a.q.dot(&b.q) < 0.0, "flip keeps the negated representation");
}

#[test]
fn robust_only_with_proposed_variable() {
    let err = scenario_from_config(&parse_config("controller.kind = robust\nsliding.kind = so3\n").unwrap());
    assert!(matches!(err, Err(ConfigError::Value { .. })), "{err:?}");
    let mut sc = preset("fig4").unwrap();
    sc.controller = ControllerKind::Adaptive;
    sc.sliding = SlidingKind::LegacyLo;
    assert!(matches!(run_scenario(&sc), Err(SimError::Invalid(_))));
}

#[test]
fn metrics_report_nan_for_non_adaptive() {
    let m = compute_metrics(&run_scenario(&short("fig3", 0.1)).unwrap());
    assert!(m.min_estimate_eigenvalue.is_nan());
    let mut sc = short("fig4", 0.5);
    sc.controller = ControllerKind::Adaptive;
    let m = compute_metrics(&run_scenario(&sc).unwrap());
    assert!(m.min_estimate_eigenvalue > 0.0);
    assert!(m.max_lyapunov_increase <= 1e-8);
}
