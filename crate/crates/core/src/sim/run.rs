use rayon::prelude::*;

use crate::adapt::{adapt_step_deriv, bregman_div, AdaptError, ParamVector, PsiFunction, Vec6};
use crate::control::{
    adaptive_torque, baseline_wie_pd, evaluate_sliding, pd_torque_with, robust_gain, robust_torque, DesiredSample,
    SlidingKind, TorqueCommand, TrackingError,
};
use crate::dynamics::{angular_accel, rk4_step, DynamicsError, RigidBodyState, StateDot};
use crate::quat::{error_quaternion, quat_deriv, UnitQuaternion, Vec3};

use super::scenario::{ControllerKind, GainMode, Scenario};
use super::SimError;

/// Logged rows are capped at about this many intervals.
pub const MAX_LOG_INTERVALS: usize = 10_000;

/// Times a rejected log-det step is halved before giving up.
pub const MAX_STEP_HALVINGS: u32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub t: f64,
    pub q: UnitQuaternion,
    pub q_d: UnitQuaternion,
    pub omega: Vec3,
    pub q_e: UnitQuaternion,
    /// Body-frame rate error, kept for path-length metrics.
    pub omega_e: Vec3,
    pub s: Vec3,
    pub branch: i8,
    pub torque: Vec3,
    pub a_hat: Option<ParamVector>,
}

/// Quantities tracked at every integration step rather than every logged row.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSummary {
    /// Largest `‖M_b(t_k) - M_b(t_{k-1})‖₂`.
    pub max_torque_jump: f64,
    pub max_torque_jump_t: f64,
    /// First time with `|s_i| ≤ Φ_i` on every axis.
    pub layer_hit: Option<f64>,
    /// Number of steps leaving the layer after `layer_hit`.
    pub layer_exits: usize,
    /// Elementwise maximum of the robust gain bound along the run.
    pub gain_envelope: Vec3,
    pub gain_deficit_steps: usize,
    pub rejected_steps: usize,
    /// Adaptive runs: largest per-step increase of `sᵀJs + 2dψ(a‖â)`.
    pub max_lyapunov_increase: Option<f64>,
    pub min_estimate_eigenvalue: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunLog {
    pub scenario: Scenario,
    pub decimation: usize,
    pub rows: Vec<Row>,
    pub summary: StepSummary,
}

impl RunLog {
    pub fn is_adaptive(&self) -> bool {
        self.scenario.controller == ControllerKind::Adaptive
    }
}

/// Everything the closed loop needs at one instant.
struct Eval {
    cmd: TorqueCommand,
    /// `d/dt â` for adaptive runs.
    a_dot: Option<Vec6>,
    err: TrackingError,
    /// Prescribed rate for kinematic runs.
    omega_cmd: Option<Vec3>,
}

struct Loop<'a> {
    sc: &'a Scenario,
}

impl<'a> Loop<'a> {
    fn desired(&self, t: f64) -> DesiredSample {
        self.sc.trajectory.sample(t)
    }

    fn eval(&self, t: f64, state: &RigidBodyState, extras: &[f64]) -> Result<Eval, SimError> {
        let sc = self.sc;
        let desired = self.desired(t);
        let nominal = sc.inertia.nominal();
        let dyn_nom = sc.dynamics.nominal();
        let cfg = &sc.sliding_cfg;
        let mut a_dot = None;
        let mut omega_cmd = None;
        let cmd = match sc.controller {
            ControllerKind::Pd => pd_torque_with(sc.sliding, state, &desired, nominal, dyn_nom, cfg, &sc.gains)?,
            ControllerKind::Robust => {
                robust_torque(state, &desired, nominal, dyn_nom, &sc.disturbance.bound(), cfg, &sc.gains)
            }
            ControllerKind::Adaptive => {
                let a_hat = ParamVector(Vec6::from_column_slice(extras));
                let (cmd, y) = adaptive_torque(state, &desired, &a_hat, cfg, &sc.gains)?;
                a_dot = Some(adapt_step_deriv(&a_hat, &y, &cmd.s, &sc.psi)?);
                cmd
            }
            ControllerKind::Baseline => {
                let q_e = error_quaternion(&desired.q_d, &state.q);
                let mut cmd = baseline_wie_pd(state, &q_e, &sc.gains);
                cmd.s = evaluate_sliding(SlidingKind::Proposed, state, &desired, cfg)?.s;
                cmd
            }
            ControllerKind::Kinematic => {
                // s = ω - ω_ref(q, t), so the on-manifold rate is -s evaluated at ω = 0
                let at_rest = RigidBodyState::at_rest(state.q);
                let ev = evaluate_sliding(sc.sliding, &at_rest, &desired, cfg)?;
                let omega = -ev.s;
                omega_cmd = Some(omega);
                let moving = RigidBodyState::new(state.q, omega);
                let ev = evaluate_sliding(sc.sliding, &moving, &desired, cfg)?;
                TorqueCommand {
                    torque: Vec3::zeros(),
                    s: ev.s,
                    branch: ev.branch,
                    saturated: [false; 3],
                    gain_deficit: false,
                }
            }
        };
        let err = TrackingError::new(
            &RigidBodyState::new(state.q, omega_cmd.unwrap_or(state.omega)),
            &desired,
        );
        Ok(Eval {
            cmd,
            a_dot,
            err,
            omega_cmd,
        })
    }

    fn field(&self, t: f64, state: &RigidBodyState, extras: &[f64]) -> Result<StateDot, SimError> {
        let e = self.eval(t, state, extras)?;
        if let Some(omega) = e.omega_cmd {
            return Ok(StateDot {
                q: quat_deriv(&state.q, &omega),
                omega: Vec3::zeros(),
                extras: Vec::new(),
            });
        }
        let sc = self.sc;
        let omega_dot = angular_accel(state, &e.cmd.torque, &sc.inertia, &sc.dynamics, &sc.disturbance, t);
        let extras = e.a_dot.map(|a| a.as_slice().to_vec()).unwrap_or_default();
        Ok(StateDot::kinematic(state, omega_dot, extras))
    }

    fn estimate_ok(&self, extras: &[f64]) -> bool {
        self.sc.controller != ControllerKind::Adaptive
            || self.sc.psi.contains(&ParamVector(Vec6::from_column_slice(extras)))
    }

    /// One step of length `dt`, halving it when a log-det estimate would
    /// leave the positive-definite cone.
    fn step(
        &self,
        t: f64,
        dt: f64,
        state: &RigidBodyState,
        extras: &[f64],
        depth: u32,
        rejected: &mut usize,
    ) -> Result<(RigidBodyState, Vec<f64>), SimError> {
        let attempt = rk4_step(state, extras, t, dt, |t, s, e| self.field(t, s, e));
        let retry = match &attempt {
            Ok((_, ex)) => !self.estimate_ok(ex),
            Err(SimError::Adapt(AdaptError::Domain(_) | AdaptError::EstimateInvalid(_))) => {
                self.sc.controller == ControllerKind::Adaptive
            }
            Err(_) => false,
        };
        if !retry {
            return attempt;
        }
        if depth >= MAX_STEP_HALVINGS {
            return Err(SimError::Adapt(AdaptError::EstimateInvalid(format!(
                "estimate left the domain at t = {t} after {MAX_STEP_HALVINGS} step halvings"
            ))));
        }
        *rejected += 1;
        let h = 0.5 * dt;
        let (mid, ex) = self.step(t, h, state, extras, depth + 1, rejected)?;
        self.step(t + h, h, &mid, &ex, depth + 1, rejected)
    }

    fn lyapunov(&self, e: &Eval, extras: &[f64]) -> Result<f64, SimError> {
        let a_hat = ParamVector(Vec6::from_column_slice(extras));
        Ok(adaptive_lyapunov(&e.cmd.s, self.sc.inertia.truth(), &self.sc.psi, &a_hat)?)
    }
}

fn decimation_for(steps: usize) -> usize {
    steps.div_ceil(MAX_LOG_INTERVALS).max(1)
}

/// Closed-loop simulation. Deterministic for a given scenario.
pub fn run_scenario(sc: &Scenario) -> Result<RunLog, SimError> {
    sc.validate()?;
    if sc.gain_mode == GainMode::AutoRobust {
        let mut fixed = sc.clone();
        fixed.gains.k = size_robust_gains(std::slice::from_ref(sc))?;
        fixed.gain_mode = GainMode::Fixed;
        fixed.metadata.push(("K_sizing".into(), "robust envelope".into()));
        return run_scenario(&fixed);
    }
    let lp = Loop { sc };
    let n = sc.steps();
    let dec = decimation_for(n);
    let adaptive = sc.controller == ControllerKind::Adaptive;

    let mut state = sc.initial;
    let mut extras: Vec<f64> = if adaptive { sc.a0.as_slice().to_vec() } else { Vec::new() };
    let mut rows = Vec::with_capacity(n / dec + 1);
    let mut summary = StepSummary {
        max_torque_jump: 0.0,
        max_torque_jump_t: 0.0,
        layer_hit: None,
        layer_exits: 0,
        gain_envelope: Vec3::zeros(),
        gain_deficit_steps: 0,
        rejected_steps: 0,
        max_lyapunov_increase: adaptive.then_some(f64::NEG_INFINITY),
        min_estimate_eigenvalue: adaptive.then_some(f64::INFINITY),
    };
    let mut prev_torque: Option<Vec3> = None;
    let mut prev_v: Option<f64> = None;
    let mut inside = false;
    let d_bound = sc.disturbance.bound();
    let j_bound = sc.inertia.nominal().j_bound;

    for k in 0..=n {
        let t = k as f64 * sc.dt;
        let e = lp.eval(t, &state, &extras).map_err(|err| err.at_step(k))?;
        if let Some(omega) = e.omega_cmd {
            state.omega = omega;
        }

        let torque = e.cmd.torque;
        if let Some(prev) = prev_torque {
            let jump = (torque - prev).norm();
            if jump > summary.max_torque_jump {
                summary.max_torque_jump = jump;
                summary.max_torque_jump_t = t;
            }
        }
        prev_torque = Some(torque);

        let within = (0..3).all(|i| e.cmd.s[i].abs() <= sc.gains.phi[i]);
        match (summary.layer_hit, within) {
            (None, true) => summary.layer_hit = Some(t),
            (Some(_), false) if inside => summary.layer_exits += 1,
            _ => {}
        }
        inside = within;

        let needed = robust_gain(
            &state,
            &lp.desired(t),
            &j_bound,
            sc.dynamics.nominal(),
            &d_bound,
            &sc.gains.eta,
            &sc.sliding_cfg,
        );
        summary.gain_envelope = summary.gain_envelope.sup(&needed);
        if e.cmd.gain_deficit {
            summary.gain_deficit_steps += 1;
        }

        if adaptive {
            let v = lp.lyapunov(&e, &extras)?;
            if let (Some(prev), Some(inc)) = (prev_v, summary.max_lyapunov_increase.as_mut()) {
                *inc = inc.max(v - prev);
            }
            prev_v = Some(v);
            let eig = ParamVector(Vec6::from_column_slice(&extras)).min_eigenvalue();
            if let Some(m) = summary.min_estimate_eigenvalue.as_mut() {
                *m = m.min(eig);
            }
        }

        if k % dec == 0 {
            rows.push(Row {
                t,
                q: state.q,
                q_d: lp.desired(t).q_d,
                omega: state.omega,
                q_e: e.err.q_e,
                omega_e: e.err.omega_e,
                s: e.cmd.s,
                branch: e.cmd.branch,
                torque,
                a_hat: adaptive.then(|| ParamVector(Vec6::from_column_slice(&extras))),
            });
        }
        if k == n {
            break;
        }

        let (next, ex) = lp
            .step(t, sc.dt, &state, &extras, 0, &mut summary.rejected_steps)
            .map_err(|err| err.at_step(k))?;
        state = next;
        extras = ex;
        if let Some(tf) = sc.flip_at {
            let t_next = (k + 1) as f64 * sc.dt;
            if t < tf && tf <= t_next {
                state.q = -state.q;
            }
        }
    }
    if summary.max_lyapunov_increase == Some(f64::NEG_INFINITY) {
        summary.max_lyapunov_increase = Some(0.0);
    }
    Ok(RunLog {
        scenario: sc.clone(),
        decimation: dec,
        rows,
        summary,
    })
}

/// Constant per-axis `K` that dominates the robust-gain bound along every
/// supplied run, found by fixed-point iteration on the closed-loop envelope.
pub fn size_robust_gains(scenarios: &[Scenario]) -> Result<Vec3, SimError> {
    const ITERATIONS: usize = 20;
    let mut k = Vec3::zeros();
    for sc in scenarios {
        let need = robust_gain(
            &sc.initial,
            &sc.trajectory.sample(0.0),
            &sc.inertia.nominal().j_bound,
            sc.dynamics.nominal(),
            &sc.disturbance.bound(),
            &sc.gains.eta,
            &sc.sliding_cfg,
        );
        k = k.sup(&need);
    }
    for _ in 0..ITERATIONS {
        let envelopes = scenarios
            .par_iter()
            .map(|sc| {
                let mut fixed = sc.clone();
                fixed.gains.k = k;
                fixed.gain_mode = GainMode::Fixed;
                run_scenario(&fixed).map(|log| log.summary.gain_envelope)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let envelope = envelopes.iter().fold(Vec3::zeros(), |acc, e| acc.sup(e));
        if (0..3).all(|i| envelope[i] <= k[i]) {
            return Ok(k);
        }
        // small margin so the iteration settles instead of creeping
        k = k.sup(&(envelope * 1.01));
    }
    Err(SimError::Invalid(
        "robust gain sizing did not settle; the envelope keeps growing with K".into(),
    ))
}

impl SimError {
    fn at_step(self, step: usize) -> Self {
        match self {
            SimError::Dynamics(DynamicsError::Divergence { t, q, omega, extras }) => SimError::Divergence {
                step,
                source: DynamicsError::Divergence { t, q, omega, extras },
            },
            other => other,
        }
    }
}

/// `V = sᵀ J s + 2 dψ(a‖â)` with the true parameters `a`.
pub fn adaptive_lyapunov(
    s: &Vec3,
    j_true: &crate::quat::Mat3,
    psi: &PsiFunction,
    a_hat: &ParamVector,
) -> Result<f64, AdaptError> {
    let a = ParamVector::from_inertia(j_true);
    Ok(s.dot(&(j_true * s)) + 2.0 * bregman_div(psi, &a, a_hat)?)
}
