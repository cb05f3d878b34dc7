//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use qsmc::control::SlidingKind;
use qsmc::dynamics::{InertiaModel, RigidBodyState};
use qsmc::quat::{Mat3, UnitQuaternion, Vec3};
use qsmc::sim::{
    compute_metrics, draw_inertia, preset, run_scenario, size_robust_gains, verify, ControllerKind, GainMode, Metrics,
    RunLog, Scenario,
};
use qsmc::sliding::error_vec_rate;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn run(sc: &Scenario) -> (RunLog, Metrics) {
    let log = run_scenario(sc).unwrap_or_else(|e| panic!("{}: {e}", sc.name));
    let m = compute_metrics(&log);
    (log, m)
}

fn fig(name: &str, controller: ControllerKind, sliding: SlidingKind) -> Scenario {
    let mut sc = preset(name).expect("preset");
    sc.controller = controller;
    sc.sliding = sliding;
    sc.name = format!("{name}-{}-{}", controller.name(), sliding.name());
    sc
}

fn random_quat(rng: &mut ChaCha8Rng) -> UnitQuaternion {
    loop {
        let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
        let n2: f64 = c.iter().map(|x| x * x).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            return UnitQuaternion::new(c[0], c[1], c[2], c[3]).expect("non-zero");
        }
    }
}

fn decay_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let base = preset("kinematic").expect("preset");
    let lambda = base.sliding_cfg.lambda();
    let q_d = base.trajectory.sample(0.0).q_d;
    let starts: Vec<UnitQuaternion> = (0..100).map(|_| random_quat(&mut rng)).collect();
    let per_run: Vec<(f64, f64, bool)> = starts
        .par_iter()
        .map(|q_e0| {
            let mut sc = base.clone();
            sc.initial = RigidBodyState::at_rest(q_d.mul(q_e0));
            sc.dt = 5e-3;
            sc.duration = 5.0;
            let (log, _) = run(&sc);
            let (mut stated, mut corrected) = (0.0f64, 0.0f64);
            let mut monotone = true;
            for w in log.rows.windows(2) {
                let r = &w[0];
                let n2 = r.q_e.vec().norm_squared();
                let rate = 2.0 * r.q_e.vec().dot(&error_vec_rate(&r.q_e, &r.omega_e));
                stated = stated.max((rate + 2.0 * lambda * r.q_e.w().abs() * n2).abs());
                corrected = corrected.max((rate + lambda * r.q_e.w().abs() * n2).abs());
                if r.q_e.vec().norm() > 1e-8 && w[1].q_e.vec().norm() >= r.q_e.vec().norm() {
                    monotone = false;
                }
            }
            (stated, corrected, monotone)
        })
        .collect();
    let stated = per_run.iter().map(|r| r.0).fold(0.0, f64::max);
    let corrected = per_run.iter().map(|r| r.1).fold(0.0, f64::max);
    let monotone = per_run.iter().all(|r| r.2);
    outcome(
        stated < 1e-10 && monotone,
        format!(
            "residual vs rate 2λ = {stated:.3e} (need < 1e-10); residual vs rate λ = {corrected:.3e}; \
             strictly decreasing = {monotone}"
        ),
    )
}

fn ultimate_bound() -> Outcome {
    let (log, _) = run(&fig("fig3", ControllerKind::Pd, SlidingKind::Proposed));
    let sc = &log.scenario;
    let bound = Vec3::from_fn(|i, _| 1.2 * sc.disturbance.bound()[i] / sc.gains.k[i]);
    let worst = log
        .rows
        .iter()
        .filter(|r| (8.0..=10.0).contains(&r.t))
        .map(|r| r.s.abs())
        .fold(Vec3::zeros(), |a, s| a.sup(&s));
    let passed = (0..3).all(|i| worst[i] <= bound[i]);
    outcome(
        passed,
        format!(
            "max |s| on [8,10] s = ({:.4}, {:.4}, {:.4}), bound {:.3}",
            worst.x, worst.y, worst.z, bound.x
        ),
    )
}

fn no_unwinding() -> Outcome {
    let (_, p) = run(&fig("fig3", ControllerKind::Pd, SlidingKind::Proposed));
    let (_, s) = run(&fig("fig3", ControllerKind::Pd, SlidingKind::StandardSgn));
    let ok_p = p.manifold_switches == 0 && p.unwinding_ratio <= 1.2;
    let ok_s = s.manifold_switches >= 1 && s.unwinding_ratio >= 1.5;
    outcome(
        ok_p && ok_s,
        format!(
            "proposed: switches {} unwind {:.4}; standard-sgn: switches {} unwind {:.4} settle {}",
            p.manifold_switches, p.unwinding_ratio, s.manifold_switches, s.unwinding_ratio, s.settling_time
        ),
    )
}

fn faster_than_lo() -> Outcome {
    let (_, p) = run(&fig("fig3", ControllerKind::Pd, SlidingKind::Proposed));
    let (_, l) = run(&fig("fig3", ControllerKind::Pd, SlidingKind::LegacyLo));
    outcome(
        p.settling_time < l.settling_time,
        format!("settling proposed {:.3} s, legacy-lo {:.3} s", p.settling_time, l.settling_time),
    )
}

fn boundary_layer() -> Outcome {
    let base = fig("fig4", ControllerKind::Robust, SlidingKind::Proposed);
    let j_nom = base.inertia.nominal().j_nom;
    let bound: Mat3 = base.inertia.nominal().j_bound;
    let draws: Vec<Scenario> = (0..20u64)
        .map(|seed| {
            let mut sc = base.clone();
            sc.inertia = InertiaModel::new(draw_inertia(&j_nom, &bound, seed), j_nom, bound).expect("valid draw");
            sc.name = format!("draw{seed}");
            sc.gain_mode = GainMode::Fixed;
            sc
        })
        .collect();
    let k = match size_robust_gains(&draws) {
        Ok(k) => k,
        Err(e) => return outcome(false, format!("gain sizing failed: {e}")),
    };
    let results: Vec<Metrics> = draws
        .par_iter()
        .map(|sc| {
            let mut sc = sc.clone();
            sc.gains.k = k;
            run(&sc).1
        })
        .collect();
    let latest = results.iter().map(|m| m.layer_hit_time).fold(0.0, f64::max);
    let exits: usize = results.iter().map(|m| m.layer_exits).sum();
    let deficit: usize = results.iter().map(|m| m.gain_deficit_steps).sum();
    outcome(
        latest <= 5.0 && exits == 0,
        format!(
            "K = ({:.3}, {:.3}, {:.3}); latest layer entry {latest:.3} s; exits {exits}; gain-deficit steps {deficit}",
            k.x, k.y, k.z
        ),
    )
}

fn adaptive_run() -> Outcome {
    let (log, m) = run(&fig("fig4", ControllerKind::Adaptive, SlidingKind::Proposed));
    let s_end = log.rows.last().expect("rows").s.norm();
    let min_logged = log
        .rows
        .iter()
        .filter_map(|r| r.a_hat.map(|a| a.min_eigenvalue()))
        .fold(f64::INFINITY, f64::min);
    let min_eig = m.min_estimate_eigenvalue.min(min_logged);
    let dv = m.max_lyapunov_increase;
    outcome(
        s_end < 1e-3 && min_eig > 0.0 && dv <= 1e-8,
        format!("‖s(20)‖ = {s_end:.3e} (need < 1e-3); min eig M(â) = {min_eig:.4}; max ΔV = {dv:.3e}"),
    )
}

fn fig4_ordering() -> Outcome {
    let mut robust = fig("fig4", ControllerKind::Robust, SlidingKind::Proposed);
    robust.gain_mode = GainMode::AutoRobust;
    let runs: Vec<Metrics> = [
        robust,
        fig("fig4", ControllerKind::Adaptive, SlidingKind::Proposed),
        fig("fig4", ControllerKind::Pd, SlidingKind::Proposed),
    ]
    .par_iter()
    .map(|sc| run(sc).1)
    .collect();
    let (r, a, p) = (&runs[0], &runs[1], &runs[2]);
    let order = r.settling_time < a.settling_time && a.settling_time < p.settling_time;
    let effort = r.peak_effort > a.peak_effort;
    outcome(
        order && effort,
        format!(
            "settling robust {:.3} / adaptive {:.3} / pd {:.3} s; peak |M| robust {:.3} vs adaptive {:.3}",
            r.settling_time, a.settling_time, p.settling_time, r.peak_effort, a.peak_effort
        ),
    )
}

fn continuity() -> Outcome {
    let at = |controller, dt| {
        let mut sc = fig("slew-flip", controller, SlidingKind::Proposed);
        sc.dt = dt;
        run(&sc)
    };
    let (pd_log, pd) = at(ControllerKind::Pd, 1e-3);
    let (_, pd_fine) = at(ControllerKind::Pd, 5e-4);
    let (_, wie) = at(ControllerKind::Baseline, 1e-3);
    let (_, wie_fine) = at(ControllerKind::Baseline, 5e-4);

    let tf = pd_log.scenario.flip_at.expect("flip scenario");
    let around: Vec<_> = pd_log.rows.windows(2).filter(|w| w[0].t < tf && tf <= w[1].t).collect();
    let crossing = around
        .first()
        .map(|w| w[0].q_e.w() * w[1].q_e.w() < 0.0 && w[0].s.norm() > 1e-6)
        .unwrap_or(false);

    let ratio = pd.max_torque_jump / pd_fine.max_torque_jump;
    let linear = (1.6..=2.4).contains(&ratio);
    let persistent = wie.max_torque_jump > 1.0 && wie_fine.max_torque_jump > 0.8 * wie.max_torque_jump;
    outcome(
        crossing && linear && persistent,
        format!(
            "pd jump {:.3e} -> {:.3e} (ratio {ratio:.3}); baseline jump {:.3} -> {:.3}; q_e° crossing with s ≠ 0: {crossing}",
            pd.max_torque_jump, pd_fine.max_torque_jump, wie.max_torque_jump, wie_fine.max_torque_jump
        ),
    )
}

fn oracles() -> Outcome {
    let report = verify();
    let wanted = ["quaternion_composition", "logdet_hessian", "regressor_identity", "rk4_order"];
    let mut parts = Vec::new();
    let mut passed = true;
    for name in wanted {
        match report.check(name) {
            Some(c) => {
                passed &= c.passed;
                parts.push(format!("{name} {:.3e}", c.value));
            }
            None => {
                passed = false;
                parts.push(format!("{name} missing"));
            }
        }
    }
    outcome(passed, parts.join("; "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("decay law on the manifold", decay_law),
        ("ultimate bound of s under constant disturbance", ultimate_bound),
        ("no unwinding with sgn₊", no_unwinding),
        ("proposed variable settles before the legacy variable", faster_than_lo),
        ("boundary layer reached and kept over 20 inertia draws", boundary_layer),
        ("adaptive convergence and Lyapunov decrease", adaptive_run),
        ("robust < adaptive < pd settling, robust peaks highest", fig4_ordering),
        ("torque continuity across the sign flip", continuity),
        ("numerical oracles", oracles),
    ];
    let start = Instant::now();
    let results: Vec<Outcome> = criteria.par_iter().map(|(_, f)| f()).collect();
    let mut failed = 0;
    for (k, ((title, _), r)) in criteria.iter().zip(&results).enumerate() {
        let mark = if r.passed { "PASS" } else { "FAIL" };
        println!("{mark} criterion {}: {title}: {}", k + 1, r.detail);
        failed += usize::from(!r.passed);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
