//! Bregman-divergence parameter adaptation for the inertia parameters.
//!
//! Parameters are the six independent entries of the symmetric inertia
//! tensor in the order `(J₁₁, J₂₂, J₃₃, J₁₂, J₁₃, J₂₃)`. With the log-det
//! potential `ψ(a) = -ln det M(a)` the adapted estimate stays inside the
//! positive-definite cone along the continuous flow.

use std::ops::{Index, Sub};

use nalgebra::{Matrix6, SMatrix, SymmetricEigen, Vector6};
use thiserror::Error;

use crate::quat::{Mat3, Vec3};

pub type Mat6 = Matrix6<f64>;
pub type Vec6 = Vector6<f64>;
pub type Regressor = SMatrix<f64, 6, 3>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdaptError {
    #[error("outside the potential's domain: {0}")]
    Domain(String),
    #[error("parameter estimate left the positive-definite cone: {0}")]
    EstimateInvalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamVector(pub Vec6);

impl ParamVector {
    pub fn new(a: [f64; 6]) -> Self {
        Self(Vec6::from_column_slice(&a))
    }

    pub fn from_inertia(j: &Mat3) -> Self {
        Self::new([j[(0, 0)], j[(1, 1)], j[(2, 2)], j[(0, 1)], j[(0, 2)], j[(1, 2)]])
    }

    /// Symmetric embedding `M(a)`.
    pub fn to_matrix(&self) -> Mat3 {
        let a = &self.0;
        Mat3::new(a[0], a[3], a[4], a[3], a[1], a[5], a[4], a[5], a[2])
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.to_matrix()).eigenvalues.min()
    }
}

impl Index<usize> for ParamVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Sub for ParamVector {
    type Output = Vec6;
    fn sub(self, rhs: Self) -> Vec6 {
        self.0 - rhs.0
    }
}

/// Symmetric basis `E_i` matching the parameter layout, `M(a) = Σ aᵢ Eᵢ`.
pub fn basis(i: usize) -> Mat3 {
    let mut e = Mat3::zeros();
    match i {
        0..=2 => e[(i, i)] = 1.0,
        3 => {
            e[(0, 1)] = 1.0;
            e[(1, 0)] = 1.0;
        }
        4 => {
            e[(0, 2)] = 1.0;
            e[(2, 0)] = 1.0;
        }
        5 => {
            e[(1, 2)] = 1.0;
            e[(2, 1)] = 1.0;
        }
        _ => panic!("parameter index {i} out of range"),
    }
    e
}

/// `L(v)` with `M(a) v = L(v) a`.
pub fn inertia_action(v: &Vec3) -> SMatrix<f64, 3, 6> {
    SMatrix::<f64, 3, 6>::from_row_slice(&[
        v.x, 0.0, 0.0, v.y, v.z, 0.0, //
        0.0, v.y, 0.0, v.x, 0.0, v.z, //
        0.0, 0.0, v.z, 0.0, v.x, v.y,
    ])
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)] // a handful per run, copied rarely
pub enum PsiFunction {
    /// `ψ(a) = ½ aᵀ Γ⁻¹ a`.
    Quadratic { gamma: Mat6, gamma_inv: Mat6 },
    /// `ψ(a) = -ln det M(a)` on the positive-definite cone.
    LogDet,
    /// `ψ(a) = -γ⁻¹ ln det M(a)`; the adaptation rate scales with `γ`.
    ScaledLogDet { gamma: f64 },
}

impl PsiFunction {
    pub fn quadratic(gamma: Mat6) -> Result<Self, AdaptError> {
        let sym = (gamma - gamma.transpose()).abs().max() <= 1e-12 * gamma.abs().max().max(1.0);
        let lo = SymmetricEigen::new(gamma).eigenvalues.min();
        if !sym || lo.is_nan() || lo <= 0.0 {
            return Err(AdaptError::Domain("Γ must be symmetric positive-definite".into()));
        }
        let gamma_inv = gamma
            .try_inverse()
            .ok_or_else(|| AdaptError::Domain("Γ is singular".into()))?;
        Ok(Self::Quadratic { gamma, gamma_inv })
    }

    /// `Γ = γ I`.
    pub fn scaled_identity(gamma: f64) -> Result<Self, AdaptError> {
        Self::quadratic(Mat6::identity() * gamma)
    }

    pub fn scaled_logdet(gamma: f64) -> Result<Self, AdaptError> {
        if gamma > 0.0 && gamma.is_finite() {
            Ok(Self::ScaledLogDet { gamma })
        } else {
            Err(AdaptError::Domain(format!("log-det scale must be positive, got {gamma}")))
        }
    }

    /// Weight `1/γ` of the log-det term; `None` for the quadratic potential.
    fn logdet_weight(&self) -> Option<f64> {
        match self {
            Self::Quadratic { .. } => None,
            Self::LogDet => Some(1.0),
            Self::ScaledLogDet { gamma } => Some(1.0 / gamma),
        }
    }

    fn pd_inverse(x: &ParamVector) -> Result<(Mat3, f64), AdaptError> {
        let m = x.to_matrix();
        let chol = m.cholesky().ok_or_else(|| {
            AdaptError::Domain(format!("M(a) is not positive-definite for a = {:?}", x.as_slice()))
        })?;
        let det = chol.l().diagonal().iter().map(|d| d * d).product::<f64>();
        Ok((chol.inverse(), det))
    }

    pub fn value(&self, x: &ParamVector) -> Result<f64, AdaptError> {
        match self {
            Self::Quadratic { gamma_inv, .. } => Ok(0.5 * x.0.dot(&(gamma_inv * x.0))),
            _ => {
                let (_, det) = Self::pd_inverse(x)?;
                Ok(-det.ln() * self.logdet_weight().unwrap_or(1.0))
            }
        }
    }

    pub fn gradient(&self, x: &ParamVector) -> Result<Vec6, AdaptError> {
        match self {
            Self::Quadratic { gamma_inv, .. } => Ok(gamma_inv * x.0),
            _ => {
                let (inv, _) = Self::pd_inverse(x)?;
                let w = self.logdet_weight().unwrap_or(1.0);
                Ok(Vec6::from_fn(|i, _| -(inv * basis(i)).trace() * w))
            }
        }
    }

    /// `∇²ψ(x)`; for log-det `H_ij = tr(M⁻¹ E_i M⁻¹ E_j)`.
    pub fn hessian(&self, x: &ParamVector) -> Result<Mat6, AdaptError> {
        match self {
            Self::Quadratic { gamma_inv, .. } => Ok(*gamma_inv),
            _ => {
                let (inv, _) = Self::pd_inverse(x)?;
                let w = self.logdet_weight().unwrap_or(1.0);
                let products: Vec<Mat3> = (0..6).map(|i| inv * basis(i)).collect();
                Ok(Mat6::from_fn(|i, j| (products[i] * products[j]).trace() * w))
            }
        }
    }

    /// Whether `x` lies in the domain of the potential.
    pub fn contains(&self, x: &ParamVector) -> bool {
        match self {
            Self::Quadratic { .. } => x.0.iter().all(|v| v.is_finite()),
            _ => x.to_matrix().cholesky().is_some(),
        }
    }
}

pub fn psi_hessian(psi: &PsiFunction, x: &ParamVector) -> Result<Mat6, AdaptError> {
    psi.hessian(x)
}

/// `d_ψ(y ‖ x) = ψ(y) - ψ(x) - (y - x)ᵀ ∇ψ(x)`.
pub fn bregman_div(psi: &PsiFunction, y: &ParamVector, x: &ParamVector) -> Result<f64, AdaptError> {
    let g = psi.gradient(x)?;
    Ok(psi.value(y)? - psi.value(x)? - (*y - *x).dot(&g))
}

/// Adaptation law `ȧ̂ = -(∇²ψ(â))⁻¹ Y s`.
pub fn adapt_step_deriv(
    a_hat: &ParamVector,
    y: &Regressor,
    s: &Vec3,
    psi: &PsiFunction,
) -> Result<Vec6, AdaptError> {
    let ys = y * s;
    match psi {
        PsiFunction::Quadratic { gamma, .. } => Ok(-(gamma * ys)),
        _ => {
            let h = psi.hessian(a_hat)?;
            let chol = h
                .cholesky()
                .ok_or_else(|| AdaptError::Domain("Hessian is not positive-definite".into()))?;
            Ok(-chol.solve(&ys))
        }
    }
}
