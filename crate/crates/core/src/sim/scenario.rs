use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adapt::{ParamVector, PsiFunction};
use crate::control::{GainConfig, SlidingKind};
use crate::dynamics::{DisturbanceModel, InertiaModel, RigidBodyState, UnknownDynamics};
use crate::quat::{Mat3, UnitQuaternion, Vec3};
use crate::sliding::SlidingConfig;

use super::trajectory::Trajectory;
use super::SimError;

/// Most steps a single run may take.
pub const MAX_STEPS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControllerKind {
    Pd,
    Robust,
    Adaptive,
    /// Quaternion PD without feedforward.
    Baseline,
    /// `s ≡ 0` imposed kinematically: `ω` is prescribed, only `q` is integrated.
    Kinematic,
}

impl ControllerKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Pd => "pd",
            Self::Robust => "robust",
            Self::Adaptive => "adaptive",
            Self::Baseline => "baseline",
            Self::Kinematic => "kinematic",
        }
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pd" => Ok(Self::Pd),
            "robust" => Ok(Self::Robust),
            "adaptive" => Ok(Self::Adaptive),
            "baseline" | "wie" => Ok(Self::Baseline),
            "kinematic" | "kinematic-manifold" => Ok(Self::Kinematic),
            other => Err(format!("unknown controller '{other}'")),
        }
    }
}

/// Whether `K` is taken as given or sized from the robust-gain envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainMode {
    Fixed,
    AutoRobust,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub initial: RigidBodyState,
    pub trajectory: Trajectory,
    pub controller: ControllerKind,
    pub sliding: SlidingKind,
    pub sliding_cfg: SlidingConfig,
    pub inertia: InertiaModel,
    pub dynamics: UnknownDynamics,
    pub disturbance: DisturbanceModel,
    pub gains: GainConfig,
    pub gain_mode: GainMode,
    pub psi: PsiFunction,
    /// Initial parameter estimate for adaptive runs.
    pub a0: ParamVector,
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
    /// Negate the plant quaternion once this time is crossed.
    pub flip_at: Option<f64>,
    pub settle_threshold: f64,
    pub switch_gate: f64,
    /// Free-form notes echoed into outputs (assumed parameters and the like).
    pub metadata: Vec<(String, String)>,
}

impl Scenario {
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Invalid(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return bad(format!("duration must be non-negative, got {}", self.duration));
        }
        if self.steps() > MAX_STEPS {
            return bad(format!("{} steps exceeds the limit of {MAX_STEPS}", self.steps()));
        }
        if matches!(self.controller, ControllerKind::Robust | ControllerKind::Adaptive)
            && self.sliding != SlidingKind::Proposed
        {
            return bad(format!(
                "{} controller is only defined on the proposed sliding variable",
                self.controller.name()
            ));
        }
        if self.controller == ControllerKind::Adaptive && !self.psi.contains(&self.a0) {
            return bad("initial estimate is outside the potential's domain".into());
        }
        if !(self.settle_threshold > 0.0 && self.switch_gate >= 0.0) {
            return bad("settle threshold must be positive and switch gate non-negative".into());
        }
        Ok(())
    }

    pub fn describe(&self) -> Vec<(String, String)> {
        let v = |x: &Vec3| format!("{},{},{}", x.x, x.y, x.z);
        let d = |m: &Mat3| v(&m.diagonal());
        let mut out = vec![
            ("name".into(), self.name.clone()),
            ("controller".into(), self.controller.name().into()),
            ("sliding".into(), self.sliding.name().into()),
            ("trajectory".into(), self.trajectory.name().into()),
            ("lambda".into(), self.sliding_cfg.lambda().to_string()),
            ("K".into(), v(&self.gains.k)),
            ("Phi".into(), v(&self.gains.phi)),
            ("J_true_diag".into(), d(self.inertia.truth())),
            ("J_nominal_diag".into(), d(&self.inertia.nominal().j_nom)),
            ("dynamics".into(), self.dynamics.label().into()),
            ("dt".into(), self.dt.to_string()),
            ("duration".into(), self.duration.to_string()),
            ("seed".into(), self.seed.to_string()),
        ];
        out.extend(self.metadata.iter().cloned());
        out
    }
}

/// `Ĵ + diag(δ)` with `δ` uniform in `±diag(bound)`.
pub fn draw_inertia(nominal: &Mat3, bound: &Mat3, seed: u64) -> Mat3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delta = Vec3::from_fn(|i, _| {
        let u: f64 = rng.random_range(-1.0..=1.0);
        u * bound[(i, i)]
    });
    nominal + Mat3::from_diagonal(&delta)
}

pub const PRESETS: [&str; 4] = ["fig3", "fig4", "slew-flip", "kinematic"];

fn quat(w: f64, x: f64, y: f64, z: f64) -> UnitQuaternion {
    UnitQuaternion::new(w, x, y, z).expect("preset quaternions are non-zero")
}

fn diag(a: f64, b: f64, c: f64) -> Mat3 {
    Mat3::from_diagonal(&Vec3::new(a, b, c))
}

/// Built-in scenarios.
///
/// * `fig3`: pointing from `(0,1,0,0)` to `(0.707,0,-0.707,0)` with
///   `J = 10 I`, `d = (0.2,-0.2,0.2)`, `K = 5`, `λ = 2`; the plant quaternion
///   is negated at `t = 2 s`.
/// * `fig4`: same endpoints, `d = 0`, `Ĵ = 10 I`, `J = Ĵ + diag(3,-2,4)`,
///   `𝒥 = diag(3,2,4)`, `Φ = 0.1`, log-det potential, 20 s.
/// * `slew-flip`: start at rest while the target slews at 1 rad/s about z;
///   the plant quaternion is negated at `t = 5 s`.
/// * `kinematic`: on-manifold flow from the `fig3` initial error.
pub fn preset(name: &str) -> Option<Scenario> {
    let j10 = diag(10.0, 10.0, 10.0);
    let q_d = quat(0.707, 0.0, -0.707, 0.0);
    let q0 = quat(0.0, 1.0, 0.0, 0.0);
    let base = Scenario {
        name: name.to_string(),
        initial: RigidBodyState::at_rest(q0),
        trajectory: Trajectory::Constant { q_d },
        controller: ControllerKind::Pd,
        sliding: SlidingKind::Proposed,
        sliding_cfg: SlidingConfig::new(2.0).expect("positive"),
        inertia: InertiaModel::exact(j10).expect("valid"),
        dynamics: UnknownDynamics::zero(),
        disturbance: DisturbanceModel::Constant(Vec3::new(0.2, -0.2, 0.2)),
        gains: GainConfig::uniform(5.0, 0.1, 0.1, 5.0, 10.0).expect("positive"),
        gain_mode: GainMode::Fixed,
        psi: PsiFunction::LogDet,
        a0: ParamVector::from_inertia(&j10),
        dt: 1e-3,
        duration: 10.0,
        seed: 0,
        flip_at: Some(2.0),
        // the constant disturbance leaves ‖q⃗_e‖ ≈ 0.035, so 0.01 is never reached
        settle_threshold: 0.05,
        switch_gate: 0.05,
        metadata: vec![("omega0".into(), "0,0,0 (assumed)".into())],
    };
    let sc = match name {
        "fig3" => base,
        "fig4" => {
            let bound = diag(3.0, 2.0, 4.0);
            let j_true = j10 + diag(3.0, -2.0, 4.0);
            Scenario {
                inertia: InertiaModel::new(j_true, j10, bound).expect("valid"),
                disturbance: DisturbanceModel::none(),
                gains: GainConfig::uniform(5.0, 0.1, 5.0, 5.0, 10.0).expect("positive"),
                duration: 20.0,
                flip_at: None,
                settle_threshold: 0.01,
                metadata: vec![
                    ("omega0".into(), "0,0,0 (assumed)".into()),
                    ("J_nominal".into(), "diag(10,10,10) (assumed)".into()),
                    ("J_delta".into(), "diag(3,-2,4) (fixed draw)".into()),
                ],
                ..base
            }
        }
        "slew-flip" => Scenario {
            initial: RigidBodyState::at_rest(UnitQuaternion::IDENTITY),
            trajectory: Trajectory::Slew {
                q0: UnitQuaternion::IDENTITY,
                axis: Vec3::z(),
                rate: 1.0,
            },
            disturbance: DisturbanceModel::none(),
            flip_at: Some(5.0),
            settle_threshold: 0.01,
            ..base
        },
        "kinematic" => Scenario {
            controller: ControllerKind::Kinematic,
            disturbance: DisturbanceModel::none(),
            flip_at: None,
            settle_threshold: 0.01,
            initial: RigidBodyState::at_rest(quat(0.3, 0.5, -0.6, 0.55)),
            ..base
        },
        _ => return None,
    };
    Some(sc)
}
