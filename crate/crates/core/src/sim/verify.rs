use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::adapt::{Mat6, ParamVector, PsiFunction};
use crate::control::regressor;
use crate::dynamics::{free_rigid_body, rk4_step, RigidBodyState};
use crate::quat::{quat_deriv, sgn_plus, Mat3, UnitQuaternion, Vec3};
use crate::sliding::{error_scalar_rate, error_vec_rate, skew_part};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// Measured residual; for the order check, the error ratio.
    pub value: f64,
    pub threshold: String,
    pub samples: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Fault injection for negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyOptions {
    /// Added to every entry of the analytic log-det Hessian before comparison.
    pub hessian_perturbation: f64,
    pub seed: u64,
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

fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::from_fn(|_, _| scale * rng.random_range(-1.0..=1.0))
}

/// Random well-conditioned SPD inertia `A Aᵀ + c I`.
fn random_spd(rng: &mut ChaCha8Rng) -> Mat3 {
    let a = Mat3::from_fn(|_, _| rng.random_range(-1.0..=1.0));
    a * a.transpose() + Mat3::identity() * rng.random_range(0.5..=2.0)
}

fn max_abs(m: impl IntoIterator<Item = f64>) -> f64 {
    m.into_iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn composition(rng: &mut ChaCha8Rng) -> CheckResult {
    const N: usize = 1000;
    let mut worst = 0.0f64;
    for _ in 0..N {
        let (p, q) = (random_quat(rng), random_quat(rng));
        let lhs = *p.mul(&q).to_rotation().matrix();
        let rhs = p.to_rotation().matrix() * q.to_rotation().matrix();
        worst = worst.max(max_abs((lhs - rhs).iter().copied()));
    }
    CheckResult {
        name: "quaternion_composition".into(),
        value: worst,
        threshold: "< 1e-12".into(),
        samples: N,
        passed: worst < 1e-12,
    }
}

fn hessian(rng: &mut ChaCha8Rng, perturbation: f64) -> CheckResult {
    const N: usize = 100;
    let psi = PsiFunction::LogDet;
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..N {
        let x = ParamVector::from_inertia(&random_spd(rng));
        let analytic = psi.hessian(&x).expect("SPD point") + Mat6::repeat(perturbation);
        let mut fd = Mat6::zeros();
        for j in 0..6 {
            let mut up = x;
            let mut dn = x;
            up.0[j] += h;
            dn.0[j] -= h;
            let col = (psi.gradient(&up).expect("SPD") - psi.gradient(&dn).expect("SPD")) / (2.0 * h);
            fd.set_column(j, &col);
        }
        let rel = max_abs((analytic - fd).iter().copied()) / max_abs(analytic.iter().copied());
        worst = worst.max(rel);
    }
    CheckResult {
        name: "logdet_hessian".into(),
        value: worst,
        threshold: "< 1e-6 (relative)".into(),
        samples: N,
        passed: worst < 1e-6,
    }
}

fn regressor_identity(rng: &mut ChaCha8Rng) -> CheckResult {
    const N: usize = 1000;
    let mut worst = 0.0f64;
    for _ in 0..N {
        let j = random_spd(rng);
        let a = ParamVector::from_inertia(&j);
        let w = random_vec(rng, 2.0);
        let wr = random_vec(rng, 2.0);
        let lhs = regressor(&w, &wr).transpose() * a.0;
        let rhs = j * wr + w.cross(&(j * w));
        worst = worst.max(max_abs((lhs - rhs).iter().copied()));
    }
    CheckResult {
        name: "regressor_identity".into(),
        value: worst,
        threshold: "< 1e-12".into(),
        samples: N,
        passed: worst < 1e-12,
    }
}

fn integrate(j: Mat3, s0: RigidBodyState, dt: f64, steps: usize) -> RigidBodyState {
    let mut s = s0;
    let mut field = free_rigid_body(j);
    for k in 0..steps {
        s = rk4_step(&s, &[], k as f64 * dt, dt, &mut field).expect("finite free flow").0;
    }
    s
}

fn state_error(a: &RigidBodyState, b: &RigidBodyState) -> f64 {
    // sign-aligned quaternion distance plus rate error
    let dq = (a.q.coords() - b.q.coords() * a.q.dot(&b.q).signum()).norm();
    dq + (a.omega - b.omega).norm()
}

/// Error ratio between steps `h` and `h/2` against an `h/32` reference on an
/// asymmetric free body; fourth order gives 16.
fn rk4_order() -> CheckResult {
    let j = Mat3::from_diagonal(&Vec3::new(1.0, 2.0, 3.0));
    let s0 = RigidBodyState::new(UnitQuaternion::IDENTITY, Vec3::new(1.0, 0.2, 0.7));
    let (t_end, h) = (2.0, 0.05);
    let steps = (t_end / h) as usize;
    let reference = integrate(j, s0, h / 32.0, steps * 32);
    let coarse = state_error(&integrate(j, s0, h, steps), &reference);
    let fine = state_error(&integrate(j, s0, h / 2.0, steps * 2), &reference);
    let factor = coarse / fine;
    CheckResult {
        name: "rk4_order".into(),
        value: factor,
        threshold: "in [8, 32]".into(),
        samples: 3,
        passed: (8.0..=32.0).contains(&factor),
    }
}

/// Decay of `‖q⃗_e‖²` on the manifold, `d/dt ‖q⃗_e‖² = -λ |q_e°| ‖q⃗_e‖²`
/// under `q̇_e = ½ q_e ⊗ (0, ω_e)`, and escape from the equator.
fn decay_law(rng: &mut ChaCha8Rng) -> CheckResult {
    const N: usize = 100;
    let lambda = 2.0;
    let mut worst = 0.0f64;
    let mut escapes = true;
    for _ in 0..N {
        let qe = random_quat(rng);
        let sigma = sgn_plus(qe.w());
        let we = -qe.vec() * (lambda * sigma);
        let rate = 2.0 * qe.vec().dot(&error_vec_rate(&qe, &we));
        let law = -lambda * qe.w().abs() * qe.vec().norm_squared();
        worst = worst.max((rate - law).abs());
        let dir = random_vec(rng, 1.0);
        if dir.norm() > 1e-6 {
            let eq = UnitQuaternion::new(0.0, dir.x, dir.y, dir.z).expect("non-zero");
            let we = -eq.vec() * (lambda * sgn_plus(eq.w()));
            escapes &= error_scalar_rate(&eq, &we) > 0.0;
        }
    }
    CheckResult {
        name: "manifold_decay".into(),
        value: worst,
        threshold: "< 1e-10, equator repelling".into(),
        samples: N,
        passed: worst < 1e-10 && escapes,
    }
}

fn so3_bridge(rng: &mut ChaCha8Rng) -> CheckResult {
    const N: usize = 1000;
    let mut worst = 0.0f64;
    for _ in 0..N {
        let q = random_quat(rng);
        let lhs = crate::quat::vee(&skew_part(q.to_rotation().matrix()));
        let rhs = q.vec() * (2.0 * q.w());
        worst = worst.max(max_abs((lhs - rhs).iter().copied()));
        // the kinematics used by every check agree with the product form
        let w = random_vec(rng, 1.0);
        let full = quat_deriv(&q, &w);
        worst = worst.max((full[0] - error_scalar_rate(&q, &w)).abs());
    }
    CheckResult {
        name: "so3_bridge".into(),
        value: worst,
        threshold: "< 1e-12".into(),
        samples: N,
        passed: worst < 1e-12,
    }
}

pub fn verify_with(opts: VerifyOptions) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let checks = vec![
        composition(&mut rng),
        hessian(&mut rng, opts.hessian_perturbation),
        regressor_identity(&mut rng),
        rk4_order(),
        decay_law(&mut rng),
        so3_bridge(&mut rng),
    ];
    VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

pub fn verify() -> VerifyReport {
    verify_with(VerifyOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correct_build_passes() {
        let r = verify();
        for c in &r.checks {
            assert!(c.passed, "{c:?}");
        }
        assert!(r.passed);
    }

    #[test]
    fn perturbed_hessian_is_caught() {
        let r = verify_with(VerifyOptions {
            hessian_perturbation: 1e-3,
            ..Default::default()
        });
        assert!(!r.passed);
        assert!(!r.check("logdet_hessian").unwrap().passed);
        assert!(r.check("regressor_identity").unwrap().passed);
    }
}
