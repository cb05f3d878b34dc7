//! Attitude control on the unit-quaternion manifold with a sign-aware
//! sliding variable, plus a closed-loop simulator.

pub mod adapt;
pub mod control;
pub mod dynamics;
pub mod quat;
pub mod sim;
pub mod sliding;

pub use adapt::{bregman_div, ParamVector, PsiFunction};
pub use control::{DesiredSample, GainConfig, SlidingKind, TorqueCommand};
pub use dynamics::{DisturbanceModel, InertiaModel, RigidBodyState, UnknownDynamics};
pub use quat::{Mat3, RotationMatrix, UnitQuaternion, Vec3};
pub use sliding::SlidingConfig;
