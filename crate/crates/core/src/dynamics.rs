//! Rigid-body attitude plant and its fixed-step integrator.
//!
//! The plant evolves
//!
//! ```text
//! q̇     = ½ q ⊗ (0, ω)
//! J ω̇   = -ω × Jω + f(q, ω) + M_b + d(t)
//! ```
//!
//! with the true inertia, true unknown dynamics and the disturbance. Those
//! truths are held by [`InertiaModel`], [`UnknownDynamics`] and
//! [`DisturbanceModel`]; controllers only ever see the nominal views
//! ([`NominalInertia`], [`NominalDynamics`]) and the disturbance bound.

use std::fmt;
use std::sync::Arc;

use nalgebra::{SymmetricEigen, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::quat::{quat_deriv, Mat3, UnitQuaternion, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("singular inertia matrix")]
    SingularInertia,
    #[error("integration diverged at t = {t}: q = {q:?}, omega = {omega:?}, extras = {extras:?}")]
    Divergence {
        t: f64,
        q: [f64; 4],
        omega: [f64; 3],
        extras: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidBodyState {
    pub q: UnitQuaternion,
    pub omega: Vec3,
}

impl RigidBodyState {
    pub fn new(q: UnitQuaternion, omega: Vec3) -> Self {
        Self { q, omega }
    }

    pub fn at_rest(q: UnitQuaternion) -> Self {
        Self {
            q,
            omega: Vec3::zeros(),
        }
    }
}

/// Controller-facing part of the inertia model.
#[derive(Debug, Clone, PartialEq)]
pub struct NominalInertia {
    pub j_nom: Mat3,
    /// Elementwise bound on `|J_true - J_nom|`.
    pub j_bound: Mat3,
    pub eig_lo: f64,
    pub eig_hi: f64,
}

impl NominalInertia {
    /// View for controllers that know the inertia exactly.
    pub fn exact(j: Mat3) -> Self {
        let (lo, hi) = eig_range(&j);
        Self {
            j_nom: j,
            j_bound: Mat3::zeros(),
            eig_lo: lo,
            eig_hi: hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InertiaModel {
    j_true: Mat3,
    j_true_inv: Mat3,
    nominal: NominalInertia,
}

fn eig_range(m: &Mat3) -> (f64, f64) {
    let e = SymmetricEigen::new(*m).eigenvalues;
    (e.min(), e.max())
}

fn check_spd(name: &str, m: &Mat3) -> Result<(), DynamicsError> {
    if !m.iter().all(|x| x.is_finite()) {
        return Err(DynamicsError::InvalidModel(format!("{name} has non-finite entries")));
    }
    if (m - m.transpose()).abs().max() > 1e-12 * m.abs().max().max(1.0) {
        return Err(DynamicsError::InvalidModel(format!("{name} is not symmetric")));
    }
    let (lo, _) = eig_range(m);
    if lo <= 0.0 {
        return Err(DynamicsError::InvalidModel(format!(
            "{name} is not positive-definite (min eigenvalue {lo})"
        )));
    }
    Ok(())
}

impl InertiaModel {
    pub fn new(j_true: Mat3, j_nom: Mat3, j_bound: Mat3) -> Result<Self, DynamicsError> {
        check_spd("true inertia", &j_true)?;
        check_spd("nominal inertia", &j_nom)?;
        if j_bound.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(DynamicsError::InvalidModel(
                "inertia bound must be finite and nonnegative".into(),
            ));
        }
        let excess = ((j_true - j_nom).abs() - j_bound).max();
        if excess > 1e-12 {
            return Err(DynamicsError::InvalidModel(format!(
                "|J_true - J_nom| exceeds the bound by {excess:e}"
            )));
        }
        let j_true_inv = j_true.try_inverse().ok_or(DynamicsError::SingularInertia)?;
        let (eig_lo, eig_hi) = eig_range(&j_true);
        Ok(Self {
            j_true,
            j_true_inv,
            nominal: NominalInertia {
                j_nom,
                j_bound,
                eig_lo,
                eig_hi,
            },
        })
    }

    /// Perfectly known inertia.
    pub fn exact(j: Mat3) -> Result<Self, DynamicsError> {
        Self::new(j, j, Mat3::zeros())
    }

    pub fn truth(&self) -> &Mat3 {
        &self.j_true
    }

    pub fn nominal(&self) -> &NominalInertia {
        &self.nominal
    }
}

pub type DynFn = Arc<dyn Fn(&UnitQuaternion, &Vec3) -> Vec3 + Send + Sync>;

/// Unmodelled torque `f(q, ω) = f̂ + f̃` with `|f̃| ≤ ℱ(q, ω)`.
#[derive(Clone)]
pub struct UnknownDynamics {
    f_true: DynFn,
    nominal: NominalDynamics,
    label: String,
}

/// Controller-facing part of the unknown dynamics.
#[derive(Clone)]
pub struct NominalDynamics {
    f_nom: DynFn,
    f_bound: DynFn,
}

impl NominalDynamics {
    pub fn zero() -> Self {
        let z: DynFn = Arc::new(|_, _| Vec3::zeros());
        Self {
            f_nom: z.clone(),
            f_bound: z,
        }
    }

    pub fn f_nom(&self, q: &UnitQuaternion, omega: &Vec3) -> Vec3 {
        (self.f_nom)(q, omega)
    }

    pub fn f_bound(&self, q: &UnitQuaternion, omega: &Vec3) -> Vec3 {
        (self.f_bound)(q, omega)
    }
}

impl fmt::Debug for NominalDynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("NominalDynamics")
    }
}

impl fmt::Debug for UnknownDynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UnknownDynamics({})", self.label)
    }
}

impl UnknownDynamics {
    pub fn new(label: impl Into<String>, f_true: DynFn, f_nom: DynFn, f_bound: DynFn) -> Self {
        Self {
            f_true,
            nominal: NominalDynamics { f_nom, f_bound },
            label: label.into(),
        }
    }

    pub fn zero() -> Self {
        Self {
            f_true: Arc::new(|_, _| Vec3::zeros()),
            nominal: NominalDynamics::zero(),
            label: "zero".into(),
        }
    }

    /// Linear drag `f = -c ∘ ω` with true coefficient `c_true` and the
    /// controller's estimate `c_nom`.
    pub fn viscous(c_true: Vec3, c_nom: Vec3) -> Self {
        let gap = (c_true - c_nom).abs();
        Self {
            f_true: Arc::new(move |_, w| -c_true.component_mul(w)),
            nominal: NominalDynamics {
                f_nom: Arc::new(move |_, w| -c_nom.component_mul(w)),
                f_bound: Arc::new(move |_, w| gap.component_mul(&w.abs())),
            },
            label: format!("viscous(true={:?}, nominal={:?})", c_true.as_slice(), c_nom.as_slice()),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn f_true(&self, q: &UnitQuaternion, omega: &Vec3) -> Vec3 {
        (self.f_true)(q, omega)
    }

    pub fn nominal(&self) -> &NominalDynamics {
        &self.nominal
    }
}

/// Rate of the piecewise-constant seeded disturbance.
pub const RANDOM_DISTURBANCE_HZ: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub enum DisturbanceModel {
    Constant(Vec3),
    /// `amplitude ∘ sin(2π frequency t + phase)`.
    Sinusoid {
        amplitude: Vec3,
        frequency: f64,
        phase: Vec3,
    },
    /// Uniform in `[-bound, bound]`, held for `1 / RANDOM_DISTURBANCE_HZ` s.
    SeededRandom { bound: Vec3, seed: u64 },
}

impl DisturbanceModel {
    pub fn none() -> Self {
        Self::Constant(Vec3::zeros())
    }

    pub fn eval(&self, t: f64) -> Vec3 {
        match self {
            Self::Constant(d) => *d,
            Self::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => {
                let arg = 2.0 * std::f64::consts::PI * frequency * t;
                Vec3::from_fn(|i, _| amplitude[i] * (arg + phase[i]).sin())
            }
            Self::SeededRandom { bound, seed } => {
                let slot = (t * RANDOM_DISTURBANCE_HZ).floor().max(0.0) as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(slot);
                Vec3::from_fn(|i, _| {
                    let u: f64 = rng.random_range(-1.0..=1.0);
                    u * bound[i]
                })
            }
        }
    }

    /// Elementwise `D` with `|d(t)| ≤ D` for all `t`.
    pub fn bound(&self) -> Vec3 {
        match self {
            Self::Constant(d) => d.abs(),
            Self::Sinusoid { amplitude, .. } => amplitude.abs(),
            Self::SeededRandom { bound, .. } => bound.abs(),
        }
    }
}

/// `J_true⁻¹ (-ω × J_true ω + f_true + torque + d(t))`.
pub fn angular_accel(
    state: &RigidBodyState,
    torque: &Vec3,
    inertia: &InertiaModel,
    dynamics: &UnknownDynamics,
    disturbance: &DisturbanceModel,
    t: f64,
) -> Vec3 {
    let j = inertia.truth();
    let w = &state.omega;
    let rhs = -w.cross(&(j * w)) + dynamics.f_true(&state.q, w) + torque + disturbance.eval(t);
    inertia.j_true_inv * rhs
}

/// Time derivative of the stacked closed-loop state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDot {
    pub q: Vector4<f64>,
    pub omega: Vec3,
    pub extras: Vec<f64>,
}

impl StateDot {
    pub fn kinematic(state: &RigidBodyState, omega_dot: Vec3, extras: Vec<f64>) -> Self {
        Self {
            q: quat_deriv(&state.q, &state.omega),
            omega: omega_dot,
            extras,
        }
    }

    fn is_finite(&self) -> bool {
        self.q.iter().chain(self.omega.iter()).chain(self.extras.iter()).all(|x| x.is_finite())
    }
}

fn advance(base: &RigidBodyState, extras: &[f64], k: &StateDot, h: f64) -> (RigidBodyState, Vec<f64>) {
    let qc = base.q.coords() + k.q * h;
    // Stage quaternions are left off the sphere; the field is homogeneous in q.
    let q = UnitQuaternion::from_parts_unchecked(qc[0], qc.fixed_rows::<3>(1).into_owned());
    let omega = base.omega + k.omega * h;
    let ex = extras.iter().zip(&k.extras).map(|(x, d)| x + d * h).collect();
    (RigidBodyState { q, omega }, ex)
}

/// One classical Runge-Kutta step of the stacked `(q, ω, extras)` field.
///
/// `field` is evaluated at each of the four stages. Stage quaternions are
/// not unit-norm (their norm deviates by O(dt²)); the returned quaternion is
/// renormalized once.
pub fn rk4_step<F, E>(
    state: &RigidBodyState,
    extras: &[f64],
    t: f64,
    dt: f64,
    mut field: F,
) -> Result<(RigidBodyState, Vec<f64>), E>
where
    F: FnMut(f64, &RigidBodyState, &[f64]) -> Result<StateDot, E>,
    E: From<DynamicsError>,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::InvalidModel(format!("time step must be positive, got {dt}")).into());
    }
    let diverged = |t: f64, s: &RigidBodyState, ex: &[f64]| DynamicsError::Divergence {
        t,
        q: s.q.to_array(),
        omega: [s.omega.x, s.omega.y, s.omega.z],
        extras: ex.to_vec(),
    };
    let mut eval = |t: f64, s: &RigidBodyState, ex: &[f64]| -> Result<StateDot, E> {
        let k = field(t, s, ex)?;
        if k.is_finite() && k.extras.len() == ex.len() {
            Ok(k)
        } else {
            Err(diverged(t, s, ex).into())
        }
    };

    let k1 = eval(t, state, extras)?;
    let (s2, e2) = advance(state, extras, &k1, 0.5 * dt);
    let k2 = eval(t + 0.5 * dt, &s2, &e2)?;
    let (s3, e3) = advance(state, extras, &k2, 0.5 * dt);
    let k3 = eval(t + 0.5 * dt, &s3, &e3)?;
    let (s4, e4) = advance(state, extras, &k3, dt);
    let k4 = eval(t + dt, &s4, &e4)?;

    let combine = |a: f64, b: f64, c: f64, d: f64| (a + 2.0 * b + 2.0 * c + d) / 6.0;
    let incr = StateDot {
        q: (k1.q + k2.q * 2.0 + k3.q * 2.0 + k4.q) / 6.0,
        omega: (k1.omega + k2.omega * 2.0 + k3.omega * 2.0 + k4.omega) / 6.0,
        extras: (0..extras.len())
            .map(|i| combine(k1.extras[i], k2.extras[i], k3.extras[i], k4.extras[i]))
            .collect(),
    };
    let (raw, ex) = advance(state, extras, &incr, dt);
    let q = UnitQuaternion::from_vector4(raw.q.coords()).map_err(|_| diverged(t + dt, &raw, &ex))?;
    let next = RigidBodyState { q, omega: raw.omega };
    if !(next.omega.iter().chain(ex.iter()).all(|x| x.is_finite())) {
        return Err(diverged(t + dt, &next, &ex).into());
    }
    Ok((next, ex))
}

/// Torque-free, disturbance-free field for a body with inertia `j`.
pub fn free_rigid_body(j: Mat3) -> impl FnMut(f64, &RigidBodyState, &[f64]) -> Result<StateDot, DynamicsError> {
    let inv = j.try_inverse().expect("free_rigid_body needs an invertible inertia");
    move |_, s, _| {
        let w = &s.omega;
        Ok(StateDot::kinematic(s, inv * (-w.cross(&(j * w))), Vec::new()))
    }
}
