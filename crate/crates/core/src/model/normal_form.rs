//! Linear changes of coordinates: normalization to `Q = I` with diagonal
//! `Q∞`, and real/complex Schur forms of the drift.

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{solve_lyapunov, OUModel, SCHUR_MAX_ITER};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::polynomial::SparsePolynomial;
use crate::scalar::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChangeKind {
    Orthogonal,
    GeneralLinear,
}

/// New coordinates `x̃ = H·x`.
///
/// Under this change `Q ↦ H Q Hᵀ`, `B ↦ H B H⁻¹` and covariances transform
/// like `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateChange {
    pub h: Matrix<f64>,
    pub h_inv: Matrix<f64>,
    pub kind: ChangeKind,
}

impl CoordinateChange {
    pub fn identity(n: usize) -> Self {
        CoordinateChange {
            h: Matrix::identity(n),
            h_inv: Matrix::identity(n),
            kind: ChangeKind::Orthogonal,
        }
    }

    /// Builds from `H`, inverting it numerically.
    pub fn general(h: Matrix<f64>) -> Result<Self> {
        let inv = h
            .to_nalgebra()
            .try_inverse()
            .ok_or(Error::SingularSystem {
                context: "coordinate change is not invertible",
            })?;
        Ok(CoordinateChange {
            h_inv: Matrix::from_nalgebra(&inv),
            h,
            kind: ChangeKind::GeneralLinear,
        })
    }

    pub fn orthogonal(h: Matrix<f64>) -> Self {
        CoordinateChange {
            h_inv: h.transpose(),
            h,
            kind: ChangeKind::Orthogonal,
        }
    }

    /// `‖H·H⁻¹ − I‖_max`, plus `‖H·Hᵀ − I‖_max` for orthogonal changes.
    pub fn residual(&self) -> f64 {
        let n = self.h.nrows();
        let inv = self.h.mul(&self.h_inv).sub(&Matrix::identity(n)).max_abs();
        match self.kind {
            ChangeKind::Orthogonal => inv.max(
                self.h
                    .mul(&self.h.transpose())
                    .sub(&Matrix::identity(n))
                    .max_abs(),
            ),
            ChangeKind::GeneralLinear => inv,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.h.determinant()
    }

    /// `H Σ Hᵀ`.
    pub fn transform_covariance(&self, sigma: &Matrix<f64>) -> Matrix<f64> {
        let s = self.h.mul(sigma).mul(&self.h.transpose());
        s.add(&s.transpose()).scale(&0.5)
    }

    pub fn transform_drift(&self, b: &Matrix<f64>) -> Matrix<f64> {
        self.h.mul(b).mul(&self.h_inv)
    }

    /// The model expressed in the new coordinates.
    pub fn apply_to_model(&self, model: &OUModel) -> Result<OUModel> {
        OUModel::from_f64(
            self.transform_covariance(model.q()),
            self.transform_drift(model.b()),
        )
    }

    /// A function `p(x)` written in the new coordinates: `x̃ ↦ p(H⁻¹ x̃)`.
    pub fn transform_polynomial(&self, p: &SparsePolynomial<f64>) -> Result<SparsePolynomial<f64>> {
        p.substitute_linear(&self.h_inv)
    }

    pub fn compose(&self, first: &CoordinateChange) -> CoordinateChange {
        let kind = if self.kind == ChangeKind::Orthogonal && first.kind == ChangeKind::Orthogonal {
            ChangeKind::Orthogonal
        } else {
            ChangeKind::GeneralLinear
        };
        CoordinateChange {
            h: self.h.mul(&first.h),
            h_inv: first.h_inv.mul(&self.h_inv),
            kind,
        }
    }
}

fn is_diagonal(m: &Matrix<f64>, tol: f64) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)].abs() <= tol))
}

/// `(S^{-1/2}, S^{1/2})` for symmetric positive-definite `S`.
fn inverse_sqrt(s: &Matrix<f64>) -> (Matrix<f64>, Matrix<f64>) {
    let n = s.nrows();
    if is_diagonal(s, 0.0) {
        let d = s.diagonal_entries();
        return (
            Matrix::diagonal(&d.iter().map(|v| 1.0 / v.sqrt()).collect::<Vec<_>>()),
            Matrix::diagonal(&d.iter().map(|v| v.sqrt()).collect::<Vec<_>>()),
        );
    }
    let eig = SymmetricEigen::new(s.to_nalgebra());
    let v = eig.eigenvectors;
    let scaled = |f: &dyn Fn(f64) -> f64| {
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
        Matrix::from_nalgebra(&(&v * d * v.transpose()))
    };
    let inv = scaled(&|l| 1.0 / l.sqrt());
    let root = scaled(&|l| l.sqrt());
    debug_assert_eq!(inv.nrows(), n);
    (inv, root)
}

/// Orthogonal `H` with `H S Hᵀ` diagonal, eigenvalues ascending and each
/// eigenvector's largest component positive.
fn diagonalizing_rotation(s: &Matrix<f64>) -> Matrix<f64> {
    let n = s.nrows();
    if is_diagonal(s, 0.0) {
        return Matrix::identity(n);
    }
    let eig = SymmetricEigen::new(s.to_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    Matrix::from_fn(n, n, |i, j| {
        let col = eig.eigenvectors.column(order[i]);
        let lead = col
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(1.0);
        col[j] * lead.signum()
    })
}

/// Coordinates in which `Q̃ = I` and `Q̃∞` is diagonal: `H = H₂·Q^{-1/2}` with
/// `H₂` an orthogonal rotation diagonalizing the whitened `Q∞`.
///
/// When no change is needed the original model (including exact data) is
/// returned unchanged.
pub fn normalize_model(model: &OUModel) -> Result<(CoordinateChange, OUModel)> {
    let n = model.dim();
    let q_inf = solve_lyapunov(model)?.sigma;
    let (h1, h1_inv) = inverse_sqrt(model.q());
    let whiten = CoordinateChange {
        h: h1,
        h_inv: h1_inv,
        kind: ChangeKind::GeneralLinear,
    };
    let q_inf1 = whiten.transform_covariance(&q_inf);
    let rotate = CoordinateChange::orthogonal(diagonalizing_rotation(&q_inf1));
    let mut change = rotate.compose(&whiten);
    if change.h == Matrix::identity(n) {
        change.kind = ChangeKind::Orthogonal;
        return Ok((change, model.clone()));
    }
    if change.residual() < 1e-12 && change.h.mul(&change.h.transpose()).sub(&Matrix::identity(n)).max_abs() < 1e-12 {
        change.kind = ChangeKind::Orthogonal;
    }
    let normalized = change.apply_to_model(model)?;
    Ok((change, normalized))
}

/// `‖Q − I‖_max + off-diagonal mass of Q∞`, zero exactly in normal form.
pub fn normal_form_defect(model: &OUModel) -> Result<f64> {
    let n = model.dim();
    let q_dev = model.q().sub(&Matrix::identity(n)).max_abs();
    let q_inf = solve_lyapunov(model)?.sigma;
    let off = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| q_inf[(i, j)].abs())
        .fold(0.0, f64::max);
    Ok(q_dev.max(off))
}

/// Real Schur reduction of the drift.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurForm {
    /// Orthogonal change `H` with `H B Hᵀ` equal to `form`.
    pub change: CoordinateChange,
    /// Lower triangular when the spectrum is real; otherwise quasi-triangular.
    pub form: Matrix<f64>,
    /// Set when `B` has non-real eigenvalues, so only a block form exists.
    pub complex_spectrum: bool,
}

fn reversal(n: usize) -> Matrix<f64> {
    Matrix::from_fn(n, n, |i, j| if i + j + 1 == n { 1.0 } else { 0.0 })
}

/// Orthogonal `H` making `H B Hᵀ` lower triangular (real spectrum), or the
/// real Schur block form flagged with `complex_spectrum`.
pub fn schur_triangularize(b: &Matrix<f64>) -> Result<SchurForm> {
    let n = b.nrows();
    if b.is_lower_triangular() {
        return Ok(SchurForm {
            change: CoordinateChange::identity(n),
            form: b.clone(),
            complex_spectrum: false,
        });
    }
    if b.is_upper_triangular() {
        let j = reversal(n);
        return Ok(SchurForm {
            form: j.mul(b).mul(&j),
            change: CoordinateChange::orthogonal(j),
            complex_spectrum: false,
        });
    }
    let schur = Schur::try_new(b.to_nalgebra(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::ConvergenceFailure(format!("drift matrix {:?}", b.to_rows())))?;
    let (q, t) = schur.unpack();
    let (q, t) = (Matrix::from_nalgebra(&q), Matrix::from_nalgebra(&t));
    let scale = b.max_abs().max(f64::MIN_POSITIVE);
    let complex = (1..n).any(|i| t[(i, i - 1)].abs() > 1e-12 * scale);
    // Reverse the coordinate order so the upper Schur form becomes lower.
    let j = reversal(n);
    let h = j.mul(&q.transpose());
    let mut form = j.mul(&t).mul(&j);
    if !complex {
        for i in 0..n {
            for k in i + 1..n {
                form[(i, k)] = 0.0;
            }
        }
    }
    Ok(SchurForm {
        change: CoordinateChange::orthogonal(h),
        form,
        complex_spectrum: complex,
    })
}

/// Complex Schur factorization `B = U T U*` with `T` upper triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSchur {
    pub u: Matrix<C64>,
    pub t: Matrix<C64>,
}

impl ComplexSchur {
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.t.diagonal_entries()
    }
}

/// Complex Schur form of a real drift. Triangular inputs are handled without
/// iteration so repeated eigenvalues stay exact.
pub fn complex_schur(b: &Matrix<f64>) -> Result<ComplexSchur> {
    let n = b.nrows();
    if b.is_upper_triangular() {
        return Ok(ComplexSchur {
            u: Matrix::identity(n),
            t: b.lift(),
        });
    }
    if b.is_lower_triangular() {
        let j = reversal(n);
        return Ok(ComplexSchur {
            u: j.lift(),
            t: j.mul(b).mul(&j).lift(),
        });
    }
    let bc: Matrix<C64> = b.lift();
    let schur = Schur::try_new(bc.to_nalgebra(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::ConvergenceFailure(format!("drift matrix {:?}", b.to_rows())))?;
    let (u, t) = schur.unpack();
    let (u, mut t) = (Matrix::from_nalgebra(&u), Matrix::from_nalgebra(&t));
    let scale = b.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for k in 0..i {
            if t[(i, k)].norm() > 1e-10 * scale {
                return Err(Error::ConvergenceFailure(format!(
                    "complex Schur form of {:?} is not triangular",
                    b.to_rows()
                )));
            }
            t[(i, k)] = C64::new(0.0, 0.0);
        }
    }
    Ok(ComplexSchur { u, t })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Matrix<f64>, b: &Matrix<f64>, tol: f64) -> bool {
        a.sub(b).max_abs() < tol
    }

    #[test]
    fn already_normal_model_is_untouched() {
        let m = OUModel::from_ratios(
            &[&[(1, 1), (0, 1)], &[(0, 1), (1, 1)]],
            &[&[(-1, 1), (1, 1)], &[(-1, 1), (-1, 1)]],
        )
        .unwrap();
        let (h, n) = normalize_model(&m).unwrap();
        assert_eq!(h.h, Matrix::identity(2));
        assert_eq!(h.kind, ChangeKind::Orthogonal);
        assert_eq!(n, m);
    }

    #[test]
    fn diagonal_diffusion_is_whitened() {
        let m = OUModel::from_rows(&[&[4.0, 0.0], &[0.0, 1.0]], &[&[-1.0, 0.0], &[0.0, -1.0]]).unwrap();
        let (h, n) = normalize_model(&m).unwrap();
        assert_eq!(h.h, Matrix::diagonal(&[0.5, 1.0]));
        assert!(close(n.q(), &Matrix::identity(2), 1e-15));
        let q_inf = solve_lyapunov(&n).unwrap().sigma;
        assert!(close(&q_inf, &Matrix::identity(2).scale(&0.5), 1e-15));
    }

    #[test]
    fn general_model_postconditions() {
        let m = OUModel::from_rows(
            &[&[2.0, 0.5, 0.1], &[0.5, 1.0, 0.2], &[0.1, 0.2, 1.5]],
            &[&[-1.0, 0.3, 0.0], &[0.2, -2.0, 0.4], &[0.0, -0.5, -0.7]],
        )
        .unwrap();
        let (h, n) = normalize_model(&m).unwrap();
        assert!(h.residual() < 1e-12);
        assert!(normal_form_defect(&n).unwrap() < 1e-12);
    }

    #[test]
    fn schur_of_triangular_inputs() {
        let lower = Matrix::from_rows(vec![vec![-1.0, 0.0], vec![1.0, -3.0]]).unwrap();
        let s = schur_triangularize(&lower).unwrap();
        assert_eq!(s.change.h, Matrix::identity(2));
        assert_eq!(s.form, lower);
        let rot = Matrix::from_rows(vec![vec![-1.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        assert!(schur_triangularize(&rot).unwrap().complex_spectrum);
    }

    #[test]
    fn schur_of_symmetric_is_diagonal() {
        let b = Matrix::from_rows(vec![vec![-2.0, 0.5], vec![0.5, -1.0]]).unwrap();
        let s = schur_triangularize(&b).unwrap();
        assert!(!s.complex_spectrum);
        assert!(s.change.residual() < 1e-14);
        let again = s.change.h.mul(&b).mul(&s.change.h.transpose());
        assert!(close(&again, &s.form, 1e-12));
        assert!(s.form[(1, 0)].abs() < 1e-12);
    }

    #[test]
    fn complex_schur_triangularizes_rotation() {
        let b = Matrix::from_rows(vec![vec![-1.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        let s = complex_schur(&b).unwrap();
        let back = s.u.mul(&s.t).mul(&s.u.adjoint());
        assert!(back.sub(&b.lift()).max_abs() < 1e-13);
        let mut e = s.eigenvalues();
        e.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((e[0] - C64::new(-1.0, -1.0)).norm() < 1e-13);
        assert!((e[1] - C64::new(-1.0, 1.0)).norm() < 1e-13);
    }
}
