//! Splitting `A = 2L` of a normalized model into its self-adjoint part `A₁`
//! and the first-order rotation `⟨Cx, ∇⟩`, and the rotation's matrix on the
//! Hermite spaces `H_n` in dimension 2.

use serde::{Deserialize, Serialize};

use super::{BasisKind, OperatorMatrix, OperatorTag, TOL_NORMALIZED};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{normal_form_defect, solve_lyapunov, OUModel};
use crate::polynomial::{monomial_basis, BasisOrdering};
use crate::scalar::Scalar;

/// `A = A₁ + ⟨Cx, ∇⟩` with `A₁ = Δ − ⟨D_λ⁻¹x, ∇⟩` and `C = B̃ + D_λ⁻¹`,
/// `B̃ = 2B`, `D_λ = diag(λ)` the (diagonal) invariant covariance.
///
/// `C·D_λ` is always skew-symmetric; `C` itself is skew exactly when the
/// `λ_i` coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationSplit {
    pub d_lambda: Matrix<f64>,
    pub b_tilde: Matrix<f64>,
    pub c: Matrix<f64>,
}

impl RotationSplit {
    pub fn lambdas(&self) -> Vec<f64> {
        self.d_lambda.diagonal_entries()
    }

    /// `‖C + Cᵀ‖_max`.
    pub fn skew_defect(&self) -> f64 {
        self.c.add(&self.c.transpose()).max_abs()
    }

    /// `‖CD + (CD)ᵀ‖_max`.
    pub fn weighted_skew_defect(&self) -> f64 {
        let cd = self.c.mul(&self.d_lambda);
        cd.add(&cd.transpose()).max_abs()
    }

    /// Eigenvalue of `A₁` on the Hermite element of multi-index `k`:
    /// `−Σ k_i/λ_i`.
    pub fn a1_eigenvalue(&self, k: &[u32]) -> f64 {
        k.iter().zip(self.lambdas()).map(|(&ki, l)| -(ki as f64) / l).sum()
    }
}

pub fn rotation_split(model: &OUModel) -> Result<RotationSplit> {
    let residual = normal_form_defect(model)?;
    if residual > TOL_NORMALIZED {
        return Err(Error::NotNormalized { residual });
    }
    let lambda = solve_lyapunov(model)?.sigma.diagonal_entries();
    let d_lambda = Matrix::diagonal(&lambda);
    let b_tilde = model.b().scale(&2.0);
    let inv = Matrix::diagonal(&lambda.iter().map(|l| 1.0 / l).collect::<Vec<_>>());
    Ok(RotationSplit {
        c: b_tilde.add(&inv),
        d_lambda,
        b_tilde,
    })
}

/// `L^(n)`: the rotation part on `H_n` in the normalized Hermite basis
/// `H̃_{n−κ,κ}`, `κ = 0..n`. Entry `(κ+1, κ)` is `ω√(κ+1)√(n−κ)` and entry
/// `(κ, κ+1)` its negative, with `ω = c₁₂·√(λ₂/λ₁)`.
pub fn hermite_rotation_matrix(split: &RotationSplit, n: u32) -> Result<OperatorMatrix<f64>> {
    let dim = split.c.nrows();
    if dim != 2 {
        return Err(Error::UnsupportedDimension {
            expected: 2,
            found: dim,
        });
    }
    let l = split.lambdas();
    let omega = split.c[(0, 1)] * (l[1] / l[0]).sqrt();
    let size = n as usize + 1;
    let mut m = Matrix::zeros(size, size);
    for k in 0..n as usize {
        let v = omega * ((k + 1) as f64).sqrt() * ((n as usize - k) as f64).sqrt();
        m[(k + 1, k)] = v;
        m[(k, k + 1)] = -v;
    }
    Ok(OperatorMatrix {
        basis: monomial_basis(2, n, BasisOrdering::GradedLex, true),
        kind: BasisKind::HermiteNormalForm,
        entries: m,
        tag: OperatorTag::Rotation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityCheck {
    /// `‖M·M* − M*·M‖_max`.
    pub defect: f64,
    pub tolerance: f64,
    pub normal: bool,
}

pub fn check_normal<S: Scalar>(m: &Matrix<S>, tol: f64) -> NormalityCheck {
    let adj = m.adjoint();
    let defect = m.mul(&adj).sub(&adj.mul(m)).max_abs();
    NormalityCheck {
        defect,
        tolerance: tol,
        normal: defect <= tol,
    }
}
