//! Unit quaternions on S³ and their map onto SO(3).
//!
//! Quaternions here are never sign-canonicalized: `q` and `-q` are distinct
//! values that describe the same orientation, and every routine preserves
//! whichever representative it is handed.

use std::fmt;
use std::ops::Neg;

use nalgebra::{Matrix3, Vector3, Vector4};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance on `|‖q‖ - 1|` accepted at construction.
pub const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuatError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Unit quaternion `(w, v)` with scalar part `w` and vector part `v`.
#[derive(Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    w: f64,
    v: Vec3,
}

impl fmt::Debug for UnitQuaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.w, self.v.x, self.v.y, self.v.z)
    }
}

impl UnitQuaternion {
    pub const IDENTITY: Self = Self {
        w: 1.0,
        v: Vector3::new(0.0, 0.0, 0.0),
    };

    /// Builds a quaternion from four components, normalizing them.
    ///
    /// Inputs like `(0.707, 0, 0.707, 0)` are accepted and projected onto the
    /// sphere; only non-finite or zero-length inputs are rejected.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self, QuatError> {
        Self::from_vector4(Vector4::new(w, x, y, z))
    }

    pub fn from_vector4(c: Vector4<f64>) -> Result<Self, QuatError> {
        if !c.iter().all(|x| x.is_finite()) {
            return Err(QuatError::InvalidArgument(format!(
                "non-finite quaternion component in {c:?}"
            )));
        }
        let n = c.norm();
        if n < 1e-12 {
            return Err(QuatError::InvalidArgument(
                "zero-length quaternion".to_string(),
            ));
        }
        Ok(Self::from_parts_unchecked(c[0] / n, Vector3::new(c[1] / n, c[2] / n, c[3] / n)))
    }

    pub(crate) const fn from_parts_unchecked(w: f64, v: Vec3) -> Self {
        Self { w, v }
    }

    /// Rotation by `angle` radians about `axis`; the axis is normalized.
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Result<Self, QuatError> {
        let n = axis.norm();
        if !(n.is_finite() && angle.is_finite()) || n < 1e-12 {
            return Err(QuatError::InvalidArgument(format!(
                "axis-angle needs a finite non-zero axis, got {axis:?}, {angle}"
            )));
        }
        let (s, c) = (0.5 * angle).sin_cos();
        Ok(Self {
            w: c,
            v: axis * (s / n),
        })
    }

    /// Exponential map of a rotation vector `θ n̂`.
    pub fn from_rotation_vector(rv: &Vec3) -> Self {
        let angle = rv.norm();
        if angle < 1e-300 {
            return Self::IDENTITY;
        }
        let (s, c) = (0.5 * angle).sin_cos();
        Self {
            w: c,
            v: rv * (s / angle),
        }
    }

    #[inline]
    pub fn w(&self) -> f64 {
        self.w
    }

    #[inline]
    pub fn vec(&self) -> &Vec3 {
        &self.v
    }

    pub fn coords(&self) -> Vector4<f64> {
        Vector4::new(self.w, self.v.x, self.v.y, self.v.z)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.w, self.v.x, self.v.y, self.v.z]
    }

    pub fn norm(&self) -> f64 {
        self.coords().norm()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.w * other.w + self.v.dot(&other.v)
    }

    /// `(w, -v)`, the group inverse.
    pub fn conjugate(&self) -> Self {
        Self {
            w: self.w,
            v: -self.v,
        }
    }

    /// Hamilton product `self ⊗ rhs`, renormalized.
    pub fn mul(&self, rhs: &Self) -> Self {
        let raw = product(self.w, &self.v, rhs.w, &rhs.v);
        let n = raw.norm();
        Self {
            w: raw[0] / n,
            v: Vector3::new(raw[1] / n, raw[2] / n, raw[3] / n),
        }
    }

    pub fn to_rotation(&self) -> RotationMatrix {
        let (w, v) = (self.w, &self.v);
        let m = Mat3::identity() * (w * w - v.dot(v)) + v * v.transpose() * 2.0 + skew(v) * (2.0 * w);
        RotationMatrix(m)
    }

    /// Geodesic angle between the orientations `self` and `other` in `[0, π]`.
    pub fn angle_to(&self, other: &Self) -> f64 {
        let r = self.conjugate().mul(other);
        2.0 * r.v.norm().atan2(r.w.abs())
    }
}

impl Neg for UnitQuaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            w: -self.w,
            v: -self.v,
        }
    }
}

/// Raw (un-normalized) quaternion product on `(scalar, vector)` pairs.
fn product(pw: f64, pv: &Vec3, qw: f64, qv: &Vec3) -> Vector4<f64> {
    let w = pw * qw - pv.dot(qv);
    let v = qv * pw + pv * qw + pv.cross(qv);
    Vector4::new(w, v.x, v.y, v.z)
}

/// `p ⊗ q`.
pub fn qmul(p: &UnitQuaternion, q: &UnitQuaternion) -> Result<UnitQuaternion, QuatError> {
    if !(p.coords().iter().chain(q.coords().iter()).all(|x| x.is_finite())) {
        return Err(QuatError::InvalidArgument("non-finite quaternion".into()));
    }
    Ok(p.mul(q))
}

pub fn conjugate(q: &UnitQuaternion) -> UnitQuaternion {
    q.conjugate()
}

/// `q_e = q_d* ⊗ q`.
pub fn error_quaternion(q_d: &UnitQuaternion, q: &UnitQuaternion) -> UnitQuaternion {
    q_d.conjugate().mul(q)
}

/// Sign function with `sgn_plus(0) = 1`.
#[inline]
pub fn sgn_plus(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// The standard sign function, `sgn(0) = 0`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Kinematics `q̇ = ½ q ⊗ (0, ω)` as a raw 4-vector `(ẇ, v̇)`.
pub fn quat_deriv(q: &UnitQuaternion, omega: &Vec3) -> Vector4<f64> {
    product(q.w, &q.v, 0.0, omega) * 0.5
}

/// `[v]×`, so that `skew(a) * b == a.cross(b)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`skew`] applied to the skew-symmetric part of `m`.
pub fn vee(m: &Mat3) -> Vec3 {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Mat3);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Accepts `m` if it is orthonormal with unit determinant to within 1e-9.
    pub fn new(m: Mat3) -> Result<Self, QuatError> {
        let orth = (m.transpose() * m - Mat3::identity()).abs().max();
        let det = m.determinant();
        if !(orth <= 1e-9 && (det - 1.0).abs() <= 1e-9) {
            return Err(QuatError::InvalidArgument(format!(
                "not a rotation: |RᵀR - I|max = {orth:e}, det = {det}"
            )));
        }
        Ok(Self(m))
    }

    pub fn about_axis(axis: &Vec3, angle: f64) -> Result<Self, QuatError> {
        Ok(UnitQuaternion::from_axis_angle(axis, angle)?.to_rotation())
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn q(w: f64, x: f64, y: f64, z: f64) -> UnitQuaternion {
        UnitQuaternion::new(w, x, y, z).unwrap()
    }

    fn assert_quat_eq(a: &UnitQuaternion, b: &UnitQuaternion, tol: f64) {
        assert!(
            (a.coords() - b.coords()).abs().max() <= tol,
            "{a:?} != {b:?}"
        );
    }

    #[test]
    fn identity_is_neutral() {
        let p = q(0.3, -0.2, 0.9, 0.1);
        assert_quat_eq(&qmul(&UnitQuaternion::IDENTITY, &p).unwrap(), &p, 1e-15);
    }

    #[test]
    fn basis_i_times_j_is_k() {
        let k = qmul(&q(0.0, 1.0, 0.0, 0.0), &q(0.0, 0.0, 1.0, 0.0)).unwrap();
        assert_quat_eq(&k, &q(0.0, 0.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn product_matches_rotation_composition() {
        let p = q(0.707, 0.0, 0.707, 0.0);
        let r = q(0.0, 1.0, 0.0, 0.0);
        let pr = qmul(&p, &r).unwrap();
        assert_quat_eq(&pr, &q(0.0, FRAC_1_SQRT_2, 0.0, -FRAC_1_SQRT_2), 1e-15);
        let composed = p.to_rotation().compose(&r.to_rotation());
        assert!((pr.to_rotation().matrix() - composed.matrix()).abs().max() < 1e-12);
    }

    #[test]
    fn non_finite_input_rejected() {
        assert!(UnitQuaternion::new(f64::NAN, 0.0, 0.0, 0.0).is_err());
        assert!(UnitQuaternion::new(0.0, 0.0, 0.0, 0.0).is_err());
        let bad = UnitQuaternion::from_parts_unchecked(f64::INFINITY, Vec3::zeros());
        assert!(qmul(&bad, &UnitQuaternion::IDENTITY).is_err());
    }

    #[test]
    fn conjugate_cases() {
        assert_eq!(conjugate(&UnitQuaternion::IDENTITY), UnitQuaternion::IDENTITY);
        let a = q(0.707, 0.0, -0.707, 0.0);
        assert_quat_eq(&conjugate(&a), &q(0.707, 0.0, 0.707, 0.0), 0.0);
        for p in [a, q(0.1, 0.2, -0.3, 0.9), q(-0.5, 0.5, 0.5, 0.5)] {
            assert_quat_eq(&p.mul(&p.conjugate()), &UnitQuaternion::IDENTITY, 1e-15);
            assert_quat_eq(&p.conjugate().mul(&p), &UnitQuaternion::IDENTITY, 1e-15);
        }
    }

    #[test]
    fn error_quaternion_cases() {
        let p = q(0.1, 0.2, -0.3, 0.9);
        assert_quat_eq(&error_quaternion(&p, &p), &UnitQuaternion::IDENTITY, 1e-15);
        assert_quat_eq(&error_quaternion(&UnitQuaternion::IDENTITY, &p), &p, 0.0);
        // pointing-maneuver endpoints
        let q_e = error_quaternion(&q(0.707, 0.0, -0.707, 0.0), &q(0.0, 1.0, 0.0, 0.0));
        assert_quat_eq(&q_e, &q(0.0, FRAC_1_SQRT_2, 0.0, -FRAC_1_SQRT_2), 1e-15);
        assert_eq!(q_e.w(), 0.0);
    }

    #[test]
    fn sign_plus_is_one_at_zero() {
        assert_eq!(sgn_plus(0.0), 1.0);
        assert_eq!(sgn_plus(-0.3), -1.0);
        assert_eq!(sgn_plus(0.5), 1.0);
        assert_eq!(sgn(0.0), 0.0);
        assert_eq!(sgn(-2.0), -1.0);
    }

    #[test]
    fn kinematics_examples() {
        let id = UnitQuaternion::IDENTITY;
        assert_eq!(quat_deriv(&id, &Vec3::zeros()), Vector4::zeros());
        assert_eq!(quat_deriv(&id, &Vec3::new(0.0, 0.0, 2.0)), Vector4::new(0.0, 0.0, 0.0, 1.0));
        assert_eq!(quat_deriv(&id, &Vec3::new(1.0, 0.0, 0.0)), Vector4::new(0.0, 0.5, 0.0, 0.0));
    }

    #[test]
    fn axis_angle_and_rotation() {
        let a = UnitQuaternion::from_axis_angle(&Vec3::x(), PI / 2.0).unwrap();
        assert_quat_eq(&a, &q(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0), 1e-15);
        let r = a.to_rotation().apply(&Vec3::z());
        assert_relative_eq!(r, Vec3::new(0.0, -1.0, 0.0), epsilon = 1e-15);
        assert_eq!(a.to_rotation(), (-a).to_rotation());
        assert!(UnitQuaternion::from_axis_angle(&Vec3::zeros(), 1.0).is_err());
        assert!(RotationMatrix::new(Mat3::identity() * 2.0).is_err());
    }

    #[test]
    fn vee_inverts_skew() {
        let v = Vec3::new(0.3, -1.2, 2.0);
        assert_eq!(vee(&skew(&v)), v);
        let w = Vec3::new(-0.7, 0.1, 0.4);
        assert_relative_eq!(skew(&v) * w, v.cross(&w), epsilon = 1e-15);
    }
}
