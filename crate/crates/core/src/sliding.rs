//! Sliding variables on S³ × ℝ³ and SO(3) × ℝ³.
//!
//! The proposed variable is `s = ω_e + λ sgn₊(q_e°) q⃗_e`. The legacy
//! Euclidean-difference variable, the standard-sign variant and the SO(3)
//! variable are provided for comparison.

use thiserror::Error;

use crate::quat::{sgn, sgn_plus, skew, vee, Mat3, RotationMatrix, UnitQuaternion, Vec3};

/// Below this `|q°|` the matrix `T(q) = q° I + [q⃗]×` is treated as singular.
pub const LO_SINGULARITY_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SlidingError {
    #[error("sliding gain must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("T(q) is singular: |q°| = {0:e} <= {LO_SINGULARITY_THRESHOLD:e}")]
    Singular(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlidingConfig {
    lambda: f64,
}

impl SlidingConfig {
    pub fn new(lambda: f64) -> Result<Self, SlidingError> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(Self { lambda })
        } else {
            Err(SlidingError::InvalidLambda(lambda))
        }
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Sliding variable together with the branch `sgn₊(q_e°)` it was built on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlidingValue {
    pub s: Vec3,
    pub branch: i8,
}

/// Time derivative of `q⃗_e` under `q̇_e = ½ q_e ⊗ (0, ω_e)`.
pub fn error_vec_rate(q_e: &UnitQuaternion, omega_e: &Vec3) -> Vec3 {
    (omega_e * q_e.w() + q_e.vec().cross(omega_e)) * 0.5
}

/// Time derivative of `q_e°` under the same kinematics.
pub fn error_scalar_rate(q_e: &UnitQuaternion, omega_e: &Vec3) -> f64 {
    -0.5 * q_e.vec().dot(omega_e)
}

pub fn s_proposed(q_e: &UnitQuaternion, omega_e: &Vec3, cfg: &SlidingConfig) -> SlidingValue {
    let sigma = sgn_plus(q_e.w());
    SlidingValue {
        s: omega_e + q_e.vec() * (cfg.lambda * sigma),
        branch: sigma as i8,
    }
}

/// Reference rate `ω_r = ω_d - λ sgn₊(q_e°) q⃗_e`, so that `s = ω - ω_r`.
pub fn omega_r(q_e: &UnitQuaternion, omega_d: &Vec3, cfg: &SlidingConfig) -> Vec3 {
    omega_d - q_e.vec() * (cfg.lambda * sgn_plus(q_e.w()))
}

/// `T(q) = q° I + [q⃗]×`.
pub fn t_matrix(q: &UnitQuaternion) -> Mat3 {
    Mat3::identity() * q.w() + skew(q.vec())
}

/// Solves `T(q) x = b` for `x = T(q)⁻¹ b`.
pub fn t_inverse_apply(q: &UnitQuaternion, b: &Vec3) -> Result<Vec3, SlidingError> {
    if q.w().abs() <= LO_SINGULARITY_THRESHOLD {
        return Err(SlidingError::Singular(q.w().abs()));
    }
    t_matrix(q)
        .lu()
        .solve(b)
        .ok_or(SlidingError::Singular(q.w().abs()))
}

/// `2 T(q)⁻¹ q̇⃗_d`, the reference rate of the Euclidean-difference variable.
///
/// When `q̇⃗_d` is exactly zero the reference is zero and no inversion is
/// attempted, so constant targets are usable from `q° = 0`.
pub fn lo_reference_rate(q: &UnitQuaternion, q_d_vec_dot: &Vec3) -> Result<Vec3, SlidingError> {
    if *q_d_vec_dot == Vec3::zeros() {
        return Ok(Vec3::zeros());
    }
    Ok(t_inverse_apply(q, q_d_vec_dot)? * 2.0)
}

/// `s' = ω - 2T(q)⁻¹ q̇⃗_d + λ (q⃗ - q⃗_d)`.
pub fn s_legacy_lo(
    q: &UnitQuaternion,
    q_d: &UnitQuaternion,
    q_d_vec_dot: &Vec3,
    omega: &Vec3,
    cfg: &SlidingConfig,
) -> Result<Vec3, SlidingError> {
    if q.w().abs() <= LO_SINGULARITY_THRESHOLD {
        return Err(SlidingError::Singular(q.w().abs()));
    }
    let omega_ref = t_inverse_apply(q, q_d_vec_dot)? * 2.0;
    Ok(omega - omega_ref + (q.vec() - q_d.vec()) * cfg.lambda)
}

/// Same as [`s_legacy_lo`] but using [`lo_reference_rate`], as the
/// closed-loop controller does.
pub(crate) fn s_legacy_lo_tracking(
    q: &UnitQuaternion,
    q_d: &UnitQuaternion,
    q_d_vec_dot: &Vec3,
    omega: &Vec3,
    cfg: &SlidingConfig,
) -> Result<Vec3, SlidingError> {
    Ok(omega - lo_reference_rate(q, q_d_vec_dot)? + (q.vec() - q_d.vec()) * cfg.lambda)
}

/// `s = ω_e + λ sgn(q_e°) q⃗_e` with the standard `sgn(0) = 0`.
pub fn s_standard_sgn(q_e: &UnitQuaternion, omega_e: &Vec3, cfg: &SlidingConfig) -> Vec3 {
    omega_e + q_e.vec() * (cfg.lambda * sgn(q_e.w()))
}

/// Skew-symmetric part `½ (A - Aᵀ)`.
pub fn skew_part(a: &Mat3) -> Mat3 {
    (a - a.transpose()) * 0.5
}

/// `s_R = ω̆_e + λ (𝒫(R_e))∨`, where the caller supplies
/// `ω̆_e = ω - R_eᵀ ω_d`.
pub fn s_so3(r_e: &RotationMatrix, omega_e_body: &Vec3, cfg: &SlidingConfig) -> Vec3 {
    omega_e_body + vee(&skew_part(r_e.matrix())) * cfg.lambda
}
