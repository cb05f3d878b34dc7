use std::f64::consts::TAU;

use crate::control::DesiredSample;
use crate::quat::{UnitQuaternion, Vec3};

/// Desired attitude profiles with closed-form `q_d`, `ω_d`, `ω̇_d`.
///
/// Slew and sinusoid rotate about a fixed desired-frame axis, so
/// `q_d(t) = q_0 ⊗ exp(θ(t) axis / 2)` and `ω_d = θ̇ axis` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trajectory {
    Constant {
        q_d: UnitQuaternion,
    },
    Slew {
        q0: UnitQuaternion,
        axis: Vec3,
        rate: f64,
    },
    /// `ω_d = amplitude sin(2π frequency t) axis`.
    Sinusoid {
        q0: UnitQuaternion,
        axis: Vec3,
        amplitude: f64,
        frequency: f64,
    },
}

impl Trajectory {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "constant",
            Self::Slew { .. } => "slew",
            Self::Sinusoid { .. } => "sinusoid",
        }
    }

    /// Angle, rate and acceleration about the fixed axis.
    fn profile(&self, t: f64) -> (f64, f64, f64) {
        match *self {
            Self::Constant { .. } => (0.0, 0.0, 0.0),
            Self::Slew { rate, .. } => (rate * t, rate, 0.0),
            Self::Sinusoid {
                amplitude, frequency, ..
            } => {
                let w = TAU * frequency;
                (
                    amplitude / w * (1.0 - (w * t).cos()),
                    amplitude * (w * t).sin(),
                    amplitude * w * (w * t).cos(),
                )
            }
        }
    }

    pub fn sample(&self, t: f64) -> DesiredSample {
        match self {
            Self::Constant { q_d } => DesiredSample::hold(*q_d),
            Self::Slew { q0, axis, .. } | Self::Sinusoid { q0, axis, .. } => {
                let (theta, rate, accel) = self.profile(t);
                let step = UnitQuaternion::from_rotation_vector(&(axis * theta));
                DesiredSample {
                    q_d: q0.mul(&step),
                    omega_d: axis * rate,
                    omega_d_dot: axis * accel,
                }
            }
        }
    }
}
