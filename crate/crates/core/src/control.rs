//! Torque laws built on the sliding variables.
//!
//! Every sliding variable used here has the form `s = ω - ω_ref(q, t)`, so
//! `ṡ = ω̇ - α` for a reference acceleration `α` that depends only on the
//! state and the desired trajectory. The nonlinear PD law is then
//! `J α + ω × Jω - f̂ - K∘s`, the robust law replaces `K∘s` by the
//! boundary-layer term `K∘sat(s/Φ)` and the adaptive law replaces the model
//! terms by the regressor prediction `Yᵀâ`.
//!
//! The desired rate `ω_d` and acceleration `ω̇_d` are given in the desired
//! frame and are mapped into the body frame through `R(q_e)ᵀ`, which makes
//! `q̇_e = ½ q_e ⊗ (0, ω_e)` exact along moving trajectories.

use nalgebra::Vector4;
use thiserror::Error;

use crate::adapt::{inertia_action, AdaptError, ParamVector, Regressor};
use crate::dynamics::{NominalDynamics, NominalInertia, RigidBodyState};
use crate::quat::{error_quaternion, quat_deriv, sgn, sgn_plus, skew, Mat3, UnitQuaternion, Vec3};
use crate::sliding::{
    error_vec_rate, lo_reference_rate, s_legacy_lo_tracking, s_so3, t_inverse_apply,
    SlidingConfig, SlidingError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("invalid gains: {0}")]
    InvalidGains(String),
    #[error(transparent)]
    Sliding(#[from] SlidingError),
    #[error(transparent)]
    Adapt(#[from] AdaptError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainConfig {
    /// Per-axis feedback gains `k_i`.
    pub k: Vec3,
    /// Boundary-layer thickness (rad/s).
    pub phi: Vec3,
    /// Robustness margin.
    pub eta: Vec3,
    pub kp: Vec3,
    pub kd: Vec3,
}

impl GainConfig {
    pub fn new(k: Vec3, phi: Vec3, eta: Vec3, kp: Vec3, kd: Vec3) -> Result<Self, ControlError> {
        for (name, v) in [("K", &k), ("Phi", &phi), ("eta", &eta), ("Kp", &kp), ("Kd", &kd)] {
            if !v.iter().all(|x| *x > 0.0 && x.is_finite()) {
                return Err(ControlError::InvalidGains(format!(
                    "{name} must be strictly positive, got {:?}",
                    v.as_slice()
                )));
            }
        }
        Ok(Self { k, phi, eta, kp, kd })
    }

    pub fn uniform(k: f64, phi: f64, eta: f64, kp: f64, kd: f64) -> Result<Self, ControlError> {
        let v = |x| Vec3::repeat(x);
        Self::new(v(k), v(phi), v(eta), v(kp), v(kd))
    }
}

/// One sample of the desired trajectory; rates are in the desired frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredSample {
    pub q_d: UnitQuaternion,
    pub omega_d: Vec3,
    pub omega_d_dot: Vec3,
}

impl DesiredSample {
    pub fn hold(q_d: UnitQuaternion) -> Self {
        Self {
            q_d,
            omega_d: Vec3::zeros(),
            omega_d_dot: Vec3::zeros(),
        }
    }

    /// `q̇_d = ½ q_d ⊗ (0, ω_d)`.
    pub fn q_d_dot(&self) -> Vector4<f64> {
        quat_deriv(&self.q_d, &self.omega_d)
    }

    /// `q̈_d = ½ (q̇_d ⊗ (0, ω_d) + q_d ⊗ (0, ω̇_d))`.
    pub fn q_d_ddot(&self) -> Vector4<f64> {
        let qd = self.q_d_dot();
        let qd_dot = UnitQuaternion::from_parts_unchecked(qd[0], qd.fixed_rows::<3>(1).into_owned());
        quat_deriv(&qd_dot, &self.omega_d) + quat_deriv(&self.q_d, &self.omega_d_dot)
    }
}

/// Torque plus diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorqueCommand {
    pub torque: Vec3,
    pub s: Vec3,
    pub branch: i8,
    /// Axes on which `|s_i| ≥ Φ_i` (robust law only).
    pub saturated: [bool; 3],
    /// Set when the robust gain is below the bound at this state.
    pub gain_deficit: bool,
}

impl TorqueCommand {
    fn plain(torque: Vec3, s: Vec3, branch: i8) -> Self {
        Self {
            torque,
            s,
            branch,
            saturated: [false; 3],
            gain_deficit: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlidingKind {
    Proposed,
    LegacyLo,
    StandardSgn,
    So3,
}

impl SlidingKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Proposed => "proposed",
            Self::LegacyLo => "legacy-lo",
            Self::StandardSgn => "standard-sgn",
            Self::So3 => "so3",
        }
    }
}

impl std::str::FromStr for SlidingKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "proposed" => Ok(Self::Proposed),
            "legacy-lo" | "lo" => Ok(Self::LegacyLo),
            "standard-sgn" | "sgn" => Ok(Self::StandardSgn),
            "so3" => Ok(Self::So3),
            other => Err(format!("unknown sliding variable '{other}'")),
        }
    }
}

/// Attitude and rate error with the desired motion expressed in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingError {
    pub q_e: UnitQuaternion,
    /// `ω - R_eᵀ ω_d`.
    pub omega_e: Vec3,
    /// `R_eᵀ ω_d`.
    pub omega_d_body: Vec3,
    /// `d/dt (R_eᵀ ω_d) = R_eᵀ ω̇_d - ω_e × R_eᵀ ω_d`.
    pub omega_d_dot_body: Vec3,
    pub r_e: Mat3,
}

impl TrackingError {
    pub fn new(state: &RigidBodyState, desired: &DesiredSample) -> Self {
        let q_e = error_quaternion(&desired.q_d, &state.q);
        let r_e = *q_e.to_rotation().matrix();
        let omega_d_body = r_e.transpose() * desired.omega_d;
        let omega_e = state.omega - omega_d_body;
        let omega_d_dot_body = r_e.transpose() * desired.omega_d_dot - omega_e.cross(&omega_d_body);
        Self {
            q_e,
            omega_e,
            omega_d_body,
            omega_d_dot_body,
            r_e,
        }
    }
}

/// Sliding variable `s` and reference acceleration `α` with `ṡ = ω̇ - α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlidingEvaluation {
    pub s: Vec3,
    pub alpha: Vec3,
    pub branch: i8,
    pub error: TrackingError,
}

pub fn evaluate_sliding(
    kind: SlidingKind,
    state: &RigidBodyState,
    desired: &DesiredSample,
    cfg: &SlidingConfig,
) -> Result<SlidingEvaluation, ControlError> {
    let err = TrackingError::new(state, desired);
    let lambda = cfg.lambda();
    let q_e = &err.q_e;
    let (s, alpha, branch) = match kind {
        SlidingKind::Proposed | SlidingKind::StandardSgn => {
            let sigma = if kind == SlidingKind::Proposed {
                sgn_plus(q_e.w())
            } else {
                sgn(q_e.w())
            };
            let s = err.omega_e + q_e.vec() * (lambda * sigma);
            let alpha = err.omega_d_dot_body - error_vec_rate(q_e, &err.omega_e) * (lambda * sigma);
            (s, alpha, sigma as i8)
        }
        SlidingKind::LegacyLo => {
            let q = &state.q;
            let qd_dot = desired.q_d_dot();
            let qd_vec_dot = qd_dot.fixed_rows::<3>(1).into_owned();
            let qd_vec_ddot = desired.q_d_ddot().fixed_rows::<3>(1).into_owned();
            let s = s_legacy_lo_tracking(q, &desired.q_d, &qd_vec_dot, &state.omega, cfg)?;
            let q_dot = quat_deriv(q, &state.omega);
            let q_vec_dot = q_dot.fixed_rows::<3>(1).into_owned();
            let omega_ref_dot = if qd_vec_dot == Vec3::zeros() && qd_vec_ddot == Vec3::zeros() {
                Vec3::zeros()
            } else {
                // d/dt (2 T⁻¹ b) = 2 T⁻¹ (ḃ - Ṫ T⁻¹ b)
                let t_dot = Mat3::identity() * q_dot[0] + skew(&q_vec_dot);
                let x = lo_reference_rate(q, &qd_vec_dot)? * 0.5;
                t_inverse_apply(q, &(qd_vec_ddot - t_dot * x))? * 2.0
            };
            let alpha = omega_ref_dot - (q_vec_dot - qd_vec_dot) * lambda;
            (s, alpha, sgn_plus(q_e.w()) as i8)
        }
        SlidingKind::So3 => {
            let r_e = q_e.to_rotation();
            let s = s_so3(&r_e, &err.omega_e, cfg);
            // d/dt (𝒫(R_e))∨ = ½ (tr(R_e) I - R_eᵀ) ω̆_e
            let vee_rate = (Mat3::identity() * err.r_e.trace() - err.r_e.transpose()) * err.omega_e * 0.5;
            let alpha = err.omega_d_dot_body - vee_rate * lambda;
            (s, alpha, sgn_plus(q_e.w()) as i8)
        }
    };
    Ok(SlidingEvaluation {
        s,
        alpha,
        branch,
        error: err,
    })
}

/// Nonlinear PD law with feedforward on the proposed variable.
pub fn pd_torque(
    state: &RigidBodyState,
    desired: &DesiredSample,
    inertia: &NominalInertia,
    dynamics: &NominalDynamics,
    cfg: &SlidingConfig,
    gains: &GainConfig,
) -> TorqueCommand {
    pd_torque_with(SlidingKind::Proposed, state, desired, inertia, dynamics, cfg, gains)
        .expect("the proposed sliding variable has no singular configurations")
}

/// Nonlinear PD law on any of the sliding variables.
pub fn pd_torque_with(
    kind: SlidingKind,
    state: &RigidBodyState,
    desired: &DesiredSample,
    inertia: &NominalInertia,
    dynamics: &NominalDynamics,
    cfg: &SlidingConfig,
    gains: &GainConfig,
) -> Result<TorqueCommand, ControlError> {
    let ev = evaluate_sliding(kind, state, desired, cfg)?;
    let torque = model_feedforward(state, &ev.alpha, inertia, dynamics) - gains.k.component_mul(&ev.s);
    Ok(TorqueCommand::plain(torque, ev.s, ev.branch))
}

/// `Ĵ α + ω × Ĵ ω - f̂(q, ω)`.
fn model_feedforward(state: &RigidBodyState, alpha: &Vec3, inertia: &NominalInertia, dynamics: &NominalDynamics) -> Vec3 {
    let j = &inertia.j_nom;
    let w = &state.omega;
    j * alpha + w.cross(&(j * w)) - dynamics.f_nom(&state.q, w)
}

#[inline]
pub fn sat(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Boundary-layer robust law.
pub fn robust_torque(
    state: &RigidBodyState,
    desired: &DesiredSample,
    inertia: &NominalInertia,
    dynamics: &NominalDynamics,
    disturbance_bound: &Vec3,
    cfg: &SlidingConfig,
    gains: &GainConfig,
) -> TorqueCommand {
    let ev = evaluate_sliding(SlidingKind::Proposed, state, desired, cfg)
        .expect("the proposed sliding variable has no singular configurations");
    let switching = Vec3::from_fn(|i, _| gains.k[i] * sat(ev.s[i] / gains.phi[i]));
    let torque = model_feedforward(state, &ev.alpha, inertia, dynamics) - switching;
    let needed = robust_gain_at(&ev, state, &inertia.j_bound, &dynamics.f_bound(&state.q, &state.omega), disturbance_bound, &gains.eta);
    TorqueCommand {
        torque,
        s: ev.s,
        branch: ev.branch,
        saturated: [0, 1, 2].map(|i| ev.s[i].abs() >= gains.phi[i]),
        gain_deficit: (0..3).any(|i| gains.k[i] < needed[i]),
    }
}

fn robust_gain_at(
    ev: &SlidingEvaluation,
    state: &RigidBodyState,
    j_bound: &Mat3,
    f_bound: &Vec3,
    d_bound: &Vec3,
    eta: &Vec3,
) -> Vec3 {
    let w_abs = state.omega.abs();
    let gyro = skew(&state.omega).abs() * (j_bound * w_abs);
    gyro + j_bound * ev.alpha.abs() + f_bound + d_bound + eta
}

/// Smallest per-axis gain that makes `|s| ≤ Φ` attractive at this state.
///
/// `|ω × J̃ ω|` is replaced by the computable bound `|[ω]×| 𝒥 |ω|`, and the
/// inertia-error term acts on the reference acceleration `α` that appears in
/// the sliding dynamics.
pub fn robust_gain(
    state: &RigidBodyState,
    desired: &DesiredSample,
    j_bound: &Mat3,
    dynamics: &NominalDynamics,
    d_bound: &Vec3,
    eta: &Vec3,
    cfg: &SlidingConfig,
) -> Vec3 {
    let ev = evaluate_sliding(SlidingKind::Proposed, state, desired, cfg)
        .expect("the proposed sliding variable has no singular configurations");
    robust_gain_at(&ev, state, j_bound, &dynamics.f_bound(&state.q, &state.omega), d_bound, eta)
}

/// `Y` with `Yᵀ a = M(a) ω̇_r + ω × M(a) ω`.
pub fn regressor(omega: &Vec3, omega_r_dot: &Vec3) -> Regressor {
    let yt = inertia_action(omega_r_dot) + skew(omega) * inertia_action(omega);
    yt.transpose()
}

/// Certainty-equivalence law `Yᵀ â - K∘s`; also returns `Y` for the adaptation law.
pub fn adaptive_torque(
    state: &RigidBodyState,
    desired: &DesiredSample,
    a_hat: &ParamVector,
    cfg: &SlidingConfig,
    gains: &GainConfig,
) -> Result<(TorqueCommand, Regressor), ControlError> {
    if a_hat.to_matrix().cholesky().is_none() {
        return Err(AdaptError::EstimateInvalid(format!("M(â) not positive-definite for â = {:?}", a_hat.as_slice())).into());
    }
    let ev = evaluate_sliding(SlidingKind::Proposed, state, desired, cfg)?;
    let y = regressor(&state.omega, &ev.alpha);
    let torque = y.transpose() * a_hat.0 - gains.k.component_mul(&ev.s);
    Ok((TorqueCommand::plain(torque, ev.s, ev.branch), y))
}

/// Quaternion PD without feedforward, `-sgn(q_e°) K_p∘q⃗_e - K_d∘ω`.
pub fn baseline_wie_pd(state: &RigidBodyState, q_e: &UnitQuaternion, gains: &GainConfig) -> TorqueCommand {
    let torque = -gains.kp.component_mul(q_e.vec()) * sgn(q_e.w()) - gains.kd.component_mul(&state.omega);
    TorqueCommand::plain(torque, Vec3::zeros(), sgn(q_e.w()) as i8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{angular_accel, DisturbanceModel, InertiaModel, UnknownDynamics};
    use crate::sliding::s_proposed;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn q(w: f64, x: f64, y: f64, z: f64) -> UnitQuaternion {
        UnitQuaternion::new(w, x, y, z).unwrap()
    }

    fn gains(k: f64) -> GainConfig {
        GainConfig::uniform(k, 0.1, 0.1, 1.0, 1.0).unwrap()
    }

    fn lam(l: f64) -> SlidingConfig {
        SlidingConfig::new(l).unwrap()
    }

    fn diag(a: f64, b: f64, c: f64) -> Mat3 {
        Mat3::from_diagonal(&Vec3::new(a, b, c))
    }

    #[test]
    fn gains_must_be_positive() {
        assert!(GainConfig::uniform(0.0, 0.1, 0.1, 1.0, 1.0).is_err());
        assert!(GainConfig::new(Vec3::repeat(1.0), Vec3::new(0.1, -0.1, 0.1), Vec3::repeat(1.0), Vec3::repeat(1.0), Vec3::repeat(1.0)).is_err());
    }

    #[test]
    fn pd_at_equilibrium_is_zero() {
        let p = q(0.3, 0.1, -0.9, 0.2);
        let state = RigidBodyState::at_rest(p);
        let m = pd_torque(&state, &DesiredSample::hold(p), &NominalInertia::exact(diag(10.0, 10.0, 10.0)), &NominalDynamics::zero(), &lam(2.0), &gains(5.0));
        assert_eq!(m.torque, Vec3::zeros());
    }

    #[test]
    fn pd_pointing_initial_torque() {
        let state = RigidBodyState::at_rest(q(0.0, 1.0, 0.0, 0.0));
        let desired = DesiredSample::hold(q(0.707, 0.0, -0.707, 0.0));
        let m = pd_torque(&state, &desired, &NominalInertia::exact(diag(10.0, 10.0, 10.0)), &NominalDynamics::zero(), &lam(2.0), &gains(5.0));
        let s = Vec3::new(FRAC_1_SQRT_2, 0.0, -FRAC_1_SQRT_2) * 2.0;
        assert_relative_eq!(m.s, s, epsilon = 1e-15);
        assert_relative_eq!(m.torque, -s * 5.0, epsilon = 1e-14);
        assert_eq!(m.branch, 1);
    }

    /// For constant targets the PD law closes `J ṡ = -K s + d` exactly.
    #[test]
    fn pd_closes_linear_sliding_dynamics() {
        let inertia = InertiaModel::exact(Mat3::new(10.0, 0.5, -0.3, 0.5, 8.0, 0.2, -0.3, 0.2, 12.0)).unwrap();
        let f = UnknownDynamics::viscous(Vec3::new(0.3, 0.2, 0.1), Vec3::new(0.3, 0.2, 0.1));
        let d = DisturbanceModel::Constant(Vec3::new(0.2, -0.1, 0.05));
        let desired = DesiredSample {
            q_d: q(0.9, 0.1, 0.3, -0.2),
            omega_d: Vec3::new(0.2, -0.4, 0.1),
            omega_d_dot: Vec3::new(0.05, 0.02, -0.03),
        };
        let state = RigidBodyState::new(q(0.2, 0.5, -0.3, 0.7), Vec3::new(0.3, 0.1, -0.6));
        let cfg = lam(2.0);
        let g = gains(5.0);
        for kind in [SlidingKind::Proposed, SlidingKind::StandardSgn, SlidingKind::So3, SlidingKind::LegacyLo] {
            let m = pd_torque_with(kind, &state, &desired, inertia.nominal(), f.nominal(), &cfg, &g).unwrap();
            let ev = evaluate_sliding(kind, &state, &desired, &cfg).unwrap();
            let wdot = angular_accel(&state, &m.torque, &inertia, &f, &d, 0.0);
            let jsdot = inertia.truth() * (wdot - ev.alpha);
            assert_relative_eq!(jsdot, -g.k.component_mul(&m.s) + d.eval(0.0), epsilon = 1e-12);
        }
    }

    /// `α` must be the true derivative of `s`; checked by central differences
    /// along the free flow with a moving target.
    #[test]
    fn reference_acceleration_matches_finite_differences() {
        let cfg = lam(1.5);
        let state = RigidBodyState::new(q(0.6, 0.5, -0.3, 0.5), Vec3::new(0.3, -0.2, 0.4));
        let omega_dot = Vec3::new(0.1, 0.3, -0.2);
        let w_d = Vec3::new(0.4, 0.1, -0.3);
        let w_d_dot = Vec3::new(-0.2, 0.05, 0.1);
        let q_d0 = q(0.8, -0.2, 0.4, 0.4);
        let desired0 = DesiredSample { q_d: q_d0, omega_d: w_d, omega_d_dot: w_d_dot };
        // first-order paths suffice: central differences cancel the h² terms
        let at = |h: f64| {
            let qc = state.q.coords() + quat_deriv(&state.q, &state.omega) * h;
            let s = RigidBodyState::new(UnitQuaternion::from_vector4(qc).unwrap(), state.omega + omega_dot * h);
            let d = DesiredSample {
                q_d: UnitQuaternion::from_vector4(q_d0.coords() + desired0.q_d_dot() * h).unwrap(),
                omega_d: w_d + w_d_dot * h,
                omega_d_dot: w_d_dot,
            };
            (s, d)
        };
        let h = 1e-5;
        for kind in [SlidingKind::Proposed, SlidingKind::So3, SlidingKind::LegacyLo] {
            let (s0, d0) = at(0.0);
            let ev = evaluate_sliding(kind, &s0, &d0, &cfg).unwrap();
            let (sp, dp) = at(h);
            let (sm, dm) = at(-h);
            let ds = (evaluate_sliding(kind, &sp, &dp, &cfg).unwrap().s - evaluate_sliding(kind, &sm, &dm, &cfg).unwrap().s) / (2.0 * h);
            assert_relative_eq!(ds, omega_dot - ev.alpha, epsilon = 1e-7);
        }
    }

    #[test]
    fn robust_saturation_regimes() {
        let inertia = NominalInertia::exact(diag(10.0, 10.0, 10.0));
        let p = q(0.9, 0.3, -0.2, 0.2);
        let state = RigidBodyState::at_rest(p);
        let rest = robust_torque(&state, &DesiredSample::hold(p), &inertia, &NominalDynamics::zero(), &Vec3::zeros(), &lam(2.0), &gains(5.0));
        assert_eq!(rest.torque, Vec3::zeros());

        // large s: pure switching; small s: linear within the layer
        let desired = DesiredSample::hold(UnitQuaternion::IDENTITY);
        let g = GainConfig::new(Vec3::new(4.0, 5.0, 6.0), Vec3::new(0.1, 1.0, 10.0), Vec3::repeat(0.1), Vec3::repeat(1.0), Vec3::repeat(1.0)).unwrap();
        let m = robust_torque(&state, &desired, &inertia, &NominalDynamics::zero(), &Vec3::zeros(), &lam(2.0), &g);
        let s = s_proposed(&p, &Vec3::zeros(), &lam(2.0)).s;
        assert_eq!(m.saturated, [true, false, false]);
        // at rest the feedforward is -λĴ sgn₊ q̇⃗_e = 0, only the switching term is left
        assert_relative_eq!(m.torque.x, -4.0 * s.x.signum(), epsilon = 1e-12);
        assert_relative_eq!(m.torque.y, -5.0 * s.y / 1.0, epsilon = 1e-12);
        assert_relative_eq!(m.torque.z, -6.0 * s.z / 10.0, epsilon = 1e-12);
    }

    #[test]
    fn robust_gain_examples() {
        let rest = RigidBodyState::at_rest(UnitQuaternion::IDENTITY);
        let hold = DesiredSample::hold(UnitQuaternion::IDENTITY);
        let k = robust_gain(&rest, &hold, &diag(3.0, 2.0, 4.0), &NominalDynamics::zero(), &Vec3::repeat(0.2), &Vec3::repeat(0.1), &lam(2.0));
        assert_relative_eq!(k, Vec3::repeat(0.3), epsilon = 1e-15);

        let k = robust_gain(&rest, &hold, &Mat3::zeros(), &NominalDynamics::zero(), &Vec3::zeros(), &Vec3::repeat(1.0), &lam(2.0));
        assert_eq!(k, Vec3::repeat(1.0));

        let accel = DesiredSample {
            omega_d_dot: Vec3::new(1.0, 0.0, 0.0),
            ..hold
        };
        let k = robust_gain(&rest, &accel, &diag(3.0, 2.0, 4.0), &NominalDynamics::zero(), &Vec3::zeros(), &Vec3::zeros(), &lam(2.0));
        assert_eq!(k, Vec3::new(3.0, 0.0, 0.0));
    }

    #[test]
    fn gain_deficit_is_flagged() {
        let state = RigidBodyState::at_rest(q(0.9, 0.3, -0.2, 0.2));
        let hold = DesiredSample::hold(UnitQuaternion::IDENTITY);
        let inertia = NominalInertia::exact(diag(10.0, 10.0, 10.0));
        let low = robust_torque(&state, &hold, &inertia, &NominalDynamics::zero(), &Vec3::repeat(10.0), &lam(2.0), &gains(5.0));
        assert!(low.gain_deficit);
        let ok = robust_torque(&state, &hold, &inertia, &NominalDynamics::zero(), &Vec3::repeat(0.1), &lam(2.0), &gains(5.0));
        assert!(!ok.gain_deficit);
    }

    #[test]
    fn regressor_examples() {
        assert_eq!(regressor(&Vec3::zeros(), &Vec3::zeros()), Regressor::zeros());
        let a = ParamVector::new([1.0, 2.0, 3.0, 0.0, 0.0, 0.0]);
        let y = regressor(&Vec3::new(1.0, 1.0, 1.0), &Vec3::zeros());
        assert_relative_eq!(y.transpose() * a.0, Vec3::new(1.0, -2.0, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn adaptive_examples() {
        let p = q(0.3, 0.1, -0.9, 0.2);
        let state = RigidBodyState::at_rest(p);
        let a = ParamVector::new([10.0, 9.0, 11.0, 0.5, 0.0, -0.3]);
        let (m, _) = adaptive_torque(&state, &DesiredSample::hold(p), &a, &lam(2.0), &gains(5.0)).unwrap();
        assert_eq!(m.torque, Vec3::zeros());

        let bad = ParamVector::new([1.0, -1.0, 1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            adaptive_torque(&state, &DesiredSample::hold(p), &bad, &lam(2.0), &gains(5.0)),
            Err(ControlError::Adapt(AdaptError::EstimateInvalid(_)))
        ));

        // with the true parameters the law equals the exact-model PD law
        let j = a.to_matrix();
        let desired = DesiredSample {
            q_d: q(0.8, 0.0, 0.6, 0.0),
            omega_d: Vec3::new(0.1, 0.2, -0.1),
            omega_d_dot: Vec3::new(0.0, 0.1, 0.0),
        };
        let moving = RigidBodyState::new(p, Vec3::new(0.4, -0.3, 0.2));
        let (ad, _) = adaptive_torque(&moving, &desired, &a, &lam(2.0), &gains(5.0)).unwrap();
        let pd = pd_torque(&moving, &desired, &NominalInertia::exact(j), &NominalDynamics::zero(), &lam(2.0), &gains(5.0));
        assert_relative_eq!(ad.torque, pd.torque, epsilon = 1e-12);
    }

    #[test]
    fn wie_examples() {
        let g = GainConfig::uniform(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let rest = RigidBodyState::at_rest(UnitQuaternion::IDENTITY);
        assert_eq!(baseline_wie_pd(&rest, &UnitQuaternion::IDENTITY, &g).torque, Vec3::zeros());
        let qe = q(0.5, 0.5, 0.5, 0.5);
        assert_relative_eq!(baseline_wie_pd(&rest, &qe, &g).torque, Vec3::repeat(-0.5), epsilon = 1e-15);
        let flipped = q(-0.5, 0.5, 0.5, 0.5);
        assert_relative_eq!(baseline_wie_pd(&rest, &flipped, &g).torque, Vec3::repeat(0.5), epsilon = 1e-15);
    }

    /// `q` and `-q` describe the same attitude and get the same torque.
    #[test]
    fn torque_is_invariant_under_quaternion_sign() {
        let inertia = NominalInertia::exact(diag(10.0, 8.0, 12.0));
        let desired = DesiredSample {
            q_d: q(0.8, 0.0, 0.6, 0.0),
            omega_d: Vec3::new(0.1, 0.2, -0.1),
            omega_d_dot: Vec3::new(0.0, 0.1, 0.0),
        };
        let s = RigidBodyState::new(q(0.2, -0.5, 0.4, 0.7), Vec3::new(0.4, -0.3, 0.2));
        let flipped = RigidBodyState::new(-s.q, s.omega);
        let a = pd_torque(&s, &desired, &inertia, &NominalDynamics::zero(), &lam(2.0), &gains(5.0));
        let b = pd_torque(&flipped, &desired, &inertia, &NominalDynamics::zero(), &lam(2.0), &gains(5.0));
        assert_relative_eq!(a.torque, b.torque, epsilon = 1e-13);
        assert_eq!(a.branch, -b.branch);
    }
}
