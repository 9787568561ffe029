//! The `(Q, B)` model: validation, covariance matrices, coordinate changes.

mod expm;
mod input;
mod lyapunov;
mod normal_form;

use nalgebra::Schur;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{format_rational, Rational, Scalar, C64};

pub use expm::{expm, matrix_exponential};
pub use input::{model_from_entries, parse_model_json, ModelEntry};
pub use lyapunov::{covariance_at, lyapunov_residual, solve_lyapunov, solve_lyapunov_system};
pub use normal_form::{
    complex_schur, normal_form_defect, normalize_model, schur_triangularize, ChangeKind, ComplexSchur,
    CoordinateChange, SchurForm,
};

/// Margin on real parts used by the Hurwitz check.
pub const TOL_HURWITZ: f64 = 1e-10;

/// Relative tolerance for float symmetry of `Q`.
pub const TOL_SYMMETRY: f64 = 1e-12;

const SCHUR_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    ExactRational,
    Float64,
}

/// Validated Ornstein–Uhlenbeck model with diffusion `Q` and Hurwitz drift `B`.
///
/// Float copies of `Q` and `B` always exist. When every input entry was an
/// exact rational the rational matrices are kept as well and the model
/// reports [`Backend::ExactRational`].
#[derive(Debug, Clone, PartialEq)]
pub struct OUModel {
    q: Matrix<f64>,
    b: Matrix<f64>,
    exact: Option<(Matrix<Rational>, Matrix<Rational>)>,
}

impl OUModel {
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn q(&self) -> &Matrix<f64> {
        &self.q
    }

    pub fn b(&self) -> &Matrix<f64> {
        &self.b
    }

    pub fn exact_q(&self) -> Option<&Matrix<Rational>> {
        self.exact.as_ref().map(|(q, _)| q)
    }

    pub fn exact_b(&self) -> Option<&Matrix<Rational>> {
        self.exact.as_ref().map(|(_, b)| b)
    }

    pub fn backend(&self) -> Backend {
        if self.exact.is_some() {
            Backend::ExactRational
        } else {
            Backend::Float64
        }
    }

    /// Validates exact rational matrices; the model keeps them.
    pub fn from_exact(q: Matrix<Rational>, b: Matrix<Rational>) -> Result<Self> {
        check_shapes(q.nrows(), q.ncols(), b.nrows(), b.ncols())?;
        check_symmetric(&q)?;
        check_positive_definite(&q)?;
        let model = OUModel {
            q: q.to_f64(),
            b: b.to_f64(),
            exact: Some((q, b)),
        };
        check_hurwitz(&model)?;
        Ok(model)
    }

    pub fn from_f64(q: Matrix<f64>, b: Matrix<f64>) -> Result<Self> {
        check_shapes(q.nrows(), q.ncols(), b.nrows(), b.ncols())?;
        if !(0..q.nrows()).all(|i| q.row(i).iter().chain(b.row(i)).all(|v| v.is_finite())) {
            return Err(Error::InvalidParams("matrix entries must be finite".into()));
        }
        check_symmetric(&q)?;
        check_positive_definite(&q)?;
        let model = OUModel { q, b, exact: None };
        check_hurwitz(&model)?;
        Ok(model)
    }

    /// Convenience constructor from row slices of floats.
    pub fn from_rows(q: &[&[f64]], b: &[&[f64]]) -> Result<Self> {
        let to = |rows: &[&[f64]]| Matrix::from_rows(rows.iter().map(|r| r.to_vec()).collect());
        Self::from_f64(to(q)?, to(b)?)
    }

    /// Convenience constructor from integer numerator/denominator pairs.
    pub fn from_ratios(q: &[&[(i64, i64)]], b: &[&[(i64, i64)]]) -> Result<Self> {
        let to = |rows: &[&[(i64, i64)]]| {
            Matrix::from_rows(
                rows.iter()
                    .map(|r| r.iter().map(|&(n, d)| Rational::from_ratio(n, d)).collect())
                    .collect(),
            )
        };
        Self::from_exact(to(q)?, to(b)?)
    }

    /// The exact-rational twin of this model if available.
    pub fn exact_matrices(&self) -> Result<(&Matrix<Rational>, &Matrix<Rational>)> {
        self.exact
            .as_ref()
            .map(|(q, b)| (q, b))
            .ok_or_else(|| Error::ExactUnavailable("model has non-rational entries".into()))
    }

    /// Float-only copy of the model.
    pub fn without_exact(&self) -> Self {
        OUModel {
            q: self.q.clone(),
            b: self.b.clone(),
            exact: None,
        }
    }
}

/// Scalar backends that can carry a model's `Q` and `B`.
pub trait ModelScalar: Scalar {
    fn model_matrices(model: &OUModel) -> Result<(Matrix<Self>, Matrix<Self>)>;
    fn covariance(cov: &CovarianceMatrix) -> Result<Matrix<Self>>;
}

impl ModelScalar for Rational {
    fn model_matrices(model: &OUModel) -> Result<(Matrix<Self>, Matrix<Self>)> {
        let (q, b) = model.exact_matrices()?;
        Ok((q.clone(), b.clone()))
    }

    fn covariance(cov: &CovarianceMatrix) -> Result<Matrix<Self>> {
        cov.exact
            .clone()
            .ok_or_else(|| Error::ExactUnavailable("covariance has no exact value".into()))
    }
}

impl ModelScalar for f64 {
    fn model_matrices(model: &OUModel) -> Result<(Matrix<Self>, Matrix<Self>)> {
        Ok((model.q.clone(), model.b.clone()))
    }

    fn covariance(cov: &CovarianceMatrix) -> Result<Matrix<Self>> {
        Ok(cov.sigma.clone())
    }
}

impl ModelScalar for C64 {
    fn model_matrices(model: &OUModel) -> Result<(Matrix<Self>, Matrix<Self>)> {
        Ok((model.q.lift(), model.b.lift()))
    }

    fn covariance(cov: &CovarianceMatrix) -> Result<Matrix<Self>> {
        Ok(cov.sigma.lift())
    }
}

/// Time index of a covariance matrix `Q_t`, `t ∈ (0, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceTime {
    Finite(f64),
    Infinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub time: CovarianceTime,
    pub sigma: Matrix<f64>,
    pub exact: Option<Matrix<Rational>>,
}

impl CovarianceMatrix {
    pub fn from_exact(time: CovarianceTime, exact: Matrix<Rational>) -> Self {
        CovarianceMatrix {
            time,
            sigma: exact.to_f64(),
            exact: Some(exact),
        }
    }

    pub fn from_f64(time: CovarianceTime, sigma: Matrix<f64>) -> Self {
        CovarianceMatrix {
            time,
            sigma,
            exact: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }
}

fn check_shapes(qr: usize, qc: usize, br: usize, bc: usize) -> Result<()> {
    if qr == 0 || qc == 0 {
        return Err(Error::Empty { what: "Q" });
    }
    if br == 0 || bc == 0 {
        return Err(Error::Empty { what: "B" });
    }
    if qr != qc {
        return Err(Error::NotSquare {
            what: "Q",
            rows: qr,
            cols: qc,
        });
    }
    if br != bc {
        return Err(Error::NotSquare {
            what: "B",
            rows: br,
            cols: bc,
        });
    }
    if qr != br {
        return Err(Error::DimensionMismatch {
            expected: qr,
            found: br,
        });
    }
    Ok(())
}

fn check_symmetric<S: Scalar>(q: &Matrix<S>) -> Result<()> {
    let n = q.nrows();
    let scale = q.max_abs();
    for i in 0..n {
        for j in i + 1..n {
            let (u, l) = (&q[(i, j)], &q[(j, i)]);
            let bad = if S::EXACT {
                u != l
            } else {
                (u.clone() - l.clone()).magnitude() > TOL_SYMMETRY * scale
            };
            if bad {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    upper: u.to_text(),
                    lower: l.to_text(),
                });
            }
        }
    }
    Ok(())
}

fn check_positive_definite<S: Scalar>(q: &Matrix<S>) -> Result<()> {
    for k in 1..=q.nrows() {
        let minor = q.leading(k).determinant();
        let positive = minor.to_c64().re > 0.0 && !minor.is_zero();
        if !positive {
            return Err(Error::NotPositiveDefinite {
                order: k,
                value: minor.to_text(),
            });
        }
    }
    Ok(())
}

fn check_hurwitz(model: &OUModel) -> Result<()> {
    if let Some(b) = model.exact_b() {
        if b.is_lower_triangular() || b.is_upper_triangular() {
            if let Some(bad) = b.diagonal_entries().into_iter().find(|d| !d.is_negative()) {
                return Err(Error::NotHurwitz {
                    eigenvalue: format_rational(&bad),
                    tolerance: 0.0,
                });
            }
            return Ok(());
        }
    }
    let eigs = drift_eigenvalues(&model.b)?;
    if let Some(bad) = eigs.iter().find(|z| z.re >= -TOL_HURWITZ) {
        return Err(Error::NotHurwitz {
            eigenvalue: format_c64(*bad),
            tolerance: TOL_HURWITZ,
        });
    }
    Ok(())
}

pub(crate) fn format_c64(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

/// Eigenvalues of `B` with algebraic multiplicity, sorted by decreasing real
/// part and then decreasing imaginary part. Triangular inputs are read off the
/// diagonal without iteration.
pub fn drift_eigenvalues(b: &Matrix<f64>) -> Result<Vec<C64>> {
    if !b.is_square() {
        return Err(Error::NotSquare {
            what: "B",
            rows: b.nrows(),
            cols: b.ncols(),
        });
    }
    let mut eigs: Vec<C64> = if b.is_lower_triangular() || b.is_upper_triangular() {
        b.diagonal_entries().into_iter().map(|d| C64::new(d, 0.0)).collect()
    } else {
        let schur = Schur::try_new(b.to_nalgebra(), f64::EPSILON, SCHUR_MAX_ITER)
            .ok_or_else(|| Error::ConvergenceFailure(format!("drift matrix {:?}", b.to_rows())))?;
        schur.complex_eigenvalues().iter().copied().collect()
    };
    sort_spectrum(&mut eigs);
    Ok(eigs)
}

pub fn sort_spectrum(v: &mut [C64]) {
    v.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

pub fn rational_matrix_to_strings(m: &Matrix<Rational>) -> Vec<Vec<String>> {
    m.to_rows()
        .iter()
        .map(|r| r.iter().map(format_rational).collect())
        .collect()
}
