use crate::control::sat;
use crate::quat::{UnitQuaternion, Vec3};

use super::run::{Row, RunLog};

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub name: String,
    pub controller: String,
    pub sliding: String,
    /// First time after which `‖q⃗_e‖` stays below the threshold; `inf` if never.
    pub settling_time: f64,
    /// Max `|s_i|` over the last 20% of the run.
    pub steady_state_s_max: f64,
    pub peak_effort: f64,
    pub integral_effort: f64,
    pub unwinding_ratio: f64,
    pub manifold_switches: usize,
    /// `inf` if the layer `|s| ≤ Φ` is never reached.
    pub layer_hit_time: f64,
    pub layer_exits: usize,
    /// `‖s - Φ∘sat(s/Φ)‖` maximum after the first row, and at the end.
    pub s_delta_max: f64,
    pub s_delta_final: f64,
    pub max_torque_jump: f64,
    pub gain_deficit_steps: usize,
    pub rejected_steps: usize,
    /// Adaptive runs only; `NaN` otherwise.
    pub min_estimate_eigenvalue: f64,
    pub max_lyapunov_increase: f64,
}

fn settling_index(rows: &[Row], threshold: f64) -> Option<usize> {
    if rows.is_empty() {
        return None;
    }
    match rows.iter().rposition(|r| r.q_e.vec().norm() >= threshold) {
        None => Some(0),
        Some(i) if i + 1 < rows.len() => Some(i + 1),
        Some(_) => None,
    }
}

fn trapezoid(rows: &[Row], f: impl Fn(&Row) -> f64) -> f64 {
    rows.windows(2).map(|w| 0.5 * (w[1].t - w[0].t) * (f(&w[0]) + f(&w[1]))).sum()
}

/// Geodesic distance in SO(3) between the rotations `a` and `b`.
fn rotation_distance(a: &UnitQuaternion, b: &UnitQuaternion) -> f64 {
    2.0 * a.dot(b).abs().min(1.0).acos()
}

/// Travelled rotation `∫‖ω_e‖dt` over the convergent phase (up to settling,
/// or the whole run) divided by the geodesic distance between the error
/// rotations at the two ends of that phase.
///
/// When the phase ends at the identity the denominator is `2 acos|q_e°(0)|`;
/// using the actual end point keeps the ratio at or above one for runs that
/// stop short of it.
pub fn unwinding_ratio(log: &RunLog) -> f64 {
    let rows = &log.rows;
    if rows.len() < 2 {
        return 1.0;
    }
    let end = settling_index(rows, log.scenario.settle_threshold).unwrap_or(rows.len() - 1);
    let phase = &rows[..=end.max(1)];
    let travelled = trapezoid(phase, |r| r.omega_e.norm());
    let geodesic = rotation_distance(&phase[0].q_e, &phase[phase.len() - 1].q_e);
    if geodesic < 1e-12 {
        return if travelled < 1e-9 { 1.0 } else { f64::INFINITY };
    }
    travelled / geodesic
}

/// Branch sign changes while `‖q⃗_e‖` exceeds the gate.
///
/// Zeros are skipped, and a change that coincides with a jump of the
/// quaternion representation (`q_e(t_k)·q_e(t_{k-1}) < 0`) is a relabelling
/// of the same attitude, not a switch of manifold, so it is not counted.
pub fn detect_manifold_switch(log: &RunLog) -> usize {
    let gate = log.scenario.switch_gate;
    let mut last: Option<i8> = None;
    let mut count = 0;
    for (k, row) in log.rows.iter().enumerate() {
        if row.branch == 0 {
            continue;
        }
        if let Some(b) = last {
            let relabelled = k > 0 && log.rows[k - 1].q_e.dot(&row.q_e) < 0.0;
            if b != row.branch && !relabelled && row.q_e.vec().norm() > gate {
                count += 1;
            }
        }
        last = Some(row.branch);
    }
    count
}

fn s_delta(s: &Vec3, phi: &Vec3) -> Vec3 {
    Vec3::from_fn(|i, _| s[i] - phi[i] * sat(s[i] / phi[i]))
}

pub fn compute_metrics(log: &RunLog) -> Metrics {
    let sc = &log.scenario;
    let rows = &log.rows;
    let settling_time = settling_index(rows, sc.settle_threshold)
        .map(|i| rows[i].t)
        .unwrap_or(f64::INFINITY);
    let tail_start = rows.len() - rows.len().div_ceil(5).min(rows.len());
    let steady_state_s_max = rows[tail_start..].iter().map(|r| r.s.amax()).fold(0.0, f64::max);
    let peak_effort = rows.iter().map(|r| r.torque.norm()).fold(0.0, f64::max);
    let integral_effort = trapezoid(rows, |r| r.torque.norm());
    let phi = sc.gains.phi;
    let deltas: Vec<f64> = rows.iter().map(|r| s_delta(&r.s, &phi).norm()).collect();
    let summary = &log.summary;
    Metrics {
        name: sc.name.clone(),
        controller: sc.controller.name().into(),
        sliding: sc.sliding.name().into(),
        settling_time,
        steady_state_s_max,
        peak_effort,
        integral_effort,
        unwinding_ratio: unwinding_ratio(log),
        manifold_switches: detect_manifold_switch(log),
        layer_hit_time: summary.layer_hit.unwrap_or(f64::INFINITY),
        layer_exits: summary.layer_exits,
        s_delta_max: deltas.iter().skip(1).copied().fold(0.0, f64::max),
        s_delta_final: deltas.last().copied().unwrap_or(0.0),
        max_torque_jump: summary.max_torque_jump,
        gain_deficit_steps: summary.gain_deficit_steps,
        rejected_steps: summary.rejected_steps,
        min_estimate_eigenvalue: summary.min_estimate_eigenvalue.unwrap_or(f64::NAN),
        max_lyapunov_increase: summary.max_lyapunov_increase.unwrap_or(f64::NAN),
    }
}
