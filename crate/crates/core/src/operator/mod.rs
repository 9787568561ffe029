//! The generator `L f = ½ tr(Q∇²f) + ⟨Bx, ∇f⟩` on polynomials and its
//! matrices on graded bases.

mod rotation;
mod semigroup;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{solve_lyapunov, ModelScalar, OUModel};
use crate::polynomial::{hermite_tensor, monomial_basis, BasisOrdering, GradedBasis, SparsePolynomial};
use crate::scalar::Scalar;

pub use rotation::{check_normal, hermite_rotation_matrix, rotation_split, NormalityCheck, RotationSplit};
pub use semigroup::semigroup_apply;

/// Tolerance for recognizing a model as normalized (`Q = I`, `Q∞` diagonal).
pub const TOL_NORMALIZED: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorTag {
    /// `L` itself.
    Generator,
    /// `A = 2L`.
    Doubled,
    /// `𝓑 f = ⟨Bx, ∇f⟩`.
    Drift,
    /// `𝓢 f = ½ tr(Q∇²f)`.
    Diffusion,
    /// The first-order rotation part `⟨Cx, ∇f⟩` of `A`.
    Rotation,
    /// `𝓡 f = ⟨Rx, ∇f⟩` for the nilpotent part `R` of a Jordan drift.
    Nilpotent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    Monomial,
    HermiteNormalForm,
}

/// Matrix of an operator on a graded basis: column `j` holds the coordinates
/// of the image of basis element `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix<S> {
    pub basis: GradedBasis,
    pub kind: BasisKind,
    pub entries: Matrix<S>,
    pub tag: OperatorTag,
}

impl<S: Scalar> OperatorMatrix<S> {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    /// `A = 2L` from `L`.
    pub fn doubled(&self) -> Self {
        OperatorMatrix {
            basis: self.basis.clone(),
            kind: self.kind,
            entries: self.entries.scale(&S::from_i64(2)),
            tag: OperatorTag::Doubled,
        }
    }

    /// The diagonal block acting on degree `d`.
    pub fn degree_block(&self, d: u32) -> Matrix<S> {
        let r = self.basis.degree_range(d);
        Matrix::from_fn(r.len(), r.len(), |i, j| self.entries[(r.start + i, r.start + j)].clone())
    }

    /// Largest entry mapping a lower degree to a higher one; zero for
    /// operators that do not raise degree.
    pub fn degree_raising_mass(&self) -> f64 {
        let idx = self.basis.indices();
        let mut worst = 0.0f64;
        for (i, a) in idx.iter().enumerate() {
            for (j, b) in idx.iter().enumerate() {
                if a.degree() > b.degree() {
                    worst = worst.max(self.entries[(i, j)].magnitude());
                }
            }
        }
        worst
    }
}

fn check_dim<S: Scalar>(n: usize, p: &SparsePolynomial<S>) -> Result<()> {
    if p.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.dim(),
        });
    }
    Ok(())
}

/// `⟨Mx, ∇p⟩` for a square matrix `M`.
pub fn drift_apply<S: Scalar>(m: &Matrix<S>, p: &SparsePolynomial<S>) -> Result<SparsePolynomial<S>> {
    let n = m.nrows();
    check_dim(n, p)?;
    let mut out = SparsePolynomial::zero(n);
    for (alpha, c) in p.terms() {
        for i in 0..n {
            let ai = alpha.get(i);
            if ai == 0 {
                continue;
            }
            let lowered = alpha.lower(i).unwrap();
            let base = c.clone() * S::from_i64(ai as i64);
            for k in 0..n {
                if m[(i, k)].is_zero() {
                    continue;
                }
                out.add_term(lowered.raise(k), base.clone() * m[(i, k)].clone());
            }
        }
    }
    Ok(out)
}

/// `½ tr(Q ∇²p)`.
pub fn diffusion_apply<S: Scalar>(q: &Matrix<S>, p: &SparsePolynomial<S>) -> Result<SparsePolynomial<S>> {
    let n = q.nrows();
    check_dim(n, p)?;
    let half = S::one() / S::from_i64(2);
    let mut out = SparsePolynomial::zero(n);
    for (alpha, c) in p.terms() {
        for i in 0..n {
            let Some(a1) = alpha.lower(i) else { continue };
            let ci = c.clone() * S::from_i64(alpha.get(i) as i64);
            for j in 0..n {
                if q[(i, j)].is_zero() {
                    continue;
                }
                let Some(a2) = a1.lower(j) else { continue };
                let v = ci.clone() * S::from_i64(a1.get(j) as i64) * q[(i, j)].clone() * half.clone();
                out.add_term(a2, v);
            }
        }
    }
    Ok(out)
}

/// `L p` for explicit `Q` and `B`.
pub fn generator_apply<S: Scalar>(
    q: &Matrix<S>,
    b: &Matrix<S>,
    p: &SparsePolynomial<S>,
) -> Result<SparsePolynomial<S>> {
    Ok(drift_apply(b, p)? + diffusion_apply(q, p)?)
}

/// `L p` in the backend `S` (exact for rational models).
pub fn apply_generator<S: ModelScalar>(model: &OUModel, p: &SparsePolynomial<S>) -> Result<SparsePolynomial<S>> {
    let (q, b) = S::model_matrices(model)?;
    generator_apply(&q, &b, p)
}

fn assemble<S: Scalar>(
    basis: GradedBasis,
    tag: OperatorTag,
    apply: impl Fn(&SparsePolynomial<S>) -> Result<SparsePolynomial<S>> + Sync,
) -> Result<OperatorMatrix<S>> {
    let idx = basis.indices();
    let dim = basis.dim();
    let columns: Vec<Vec<S>> = idx
        .par_iter()
        .map(|alpha| {
            let image = apply(&SparsePolynomial::monomial(alpha.clone(), S::one()))?;
            image.coordinates(idx).ok_or_else(|| {
                Error::BasisUnavailable(format!(
                    "image of x^{alpha:?} leaves the span of the basis"
                ))
            })
        })
        .collect::<Result<_>>()?;
    let n = idx.len();
    debug_assert!(columns.iter().all(|c| c.len() == n) && dim >= 1);
    Ok(OperatorMatrix {
        entries: Matrix::from_fn(n, n, |i, j| columns[j][i].clone()),
        basis,
        kind: BasisKind::Monomial,
        tag,
    })
}

/// Matrix of `L` on all monomials of degree `≤ cap`.
pub fn monomial_operator_matrix<S: ModelScalar>(
    model: &OUModel,
    cap: u32,
    ordering: BasisOrdering,
) -> Result<OperatorMatrix<S>> {
    let (q, b) = S::model_matrices(model)?;
    let basis = monomial_basis(model.dim(), cap, ordering, false);
    assemble(basis, OperatorTag::Generator, |p| generator_apply(&q, &b, p))
}

/// Matrix of `L` in either the graded monomial basis or, for a normalized
/// model, the basis of normalized dilated Hermite polynomials.
pub fn operator_matrix(model: &OUModel, cap: u32, kind: BasisKind) -> Result<OperatorMatrix<f64>> {
    match kind {
        BasisKind::Monomial => monomial_operator_matrix(model, cap, BasisOrdering::GradedLex),
        BasisKind::HermiteNormalForm => hermite_operator_matrix(model, cap),
    }
}

/// Variances `λ_i` of `Q∞ = diag(λ)` for a normalized model, or
/// `BasisUnavailable`.
pub fn normal_form_variances(model: &OUModel) -> Result<Vec<f64>> {
    let n = model.dim();
    let q_dev = model.q().sub(&Matrix::identity(n)).max_abs();
    if q_dev > TOL_NORMALIZED {
        return Err(Error::BasisUnavailable(format!(
            "model is not normalized: ‖Q − I‖ = {q_dev:e}"
        )));
    }
    let q_inf = solve_lyapunov(model)?.sigma;
    for i in 0..n {
        for j in 0..n {
            if i != j && q_inf[(i, j)].abs() > TOL_NORMALIZED {
                return Err(Error::BasisUnavailable(format!(
                    "model is not normalized: Q∞[{i}][{j}] = {:e}",
                    q_inf[(i, j)]
                )));
            }
        }
    }
    Ok(q_inf.diagonal_entries())
}

/// Normalized `Π H_{k_i}(x_i/s_i)/√(2^{|k|}k!)` with `s_i = √(2λ_i)`, listed in
/// the graded-lex order of `k`.
pub fn hermite_basis(variances: &[f64], cap: u32) -> Result<(GradedBasis, Vec<SparsePolynomial<f64>>)> {
    let basis = monomial_basis(variances.len(), cap, BasisOrdering::GradedLex, false);
    let dil: Vec<f64> = variances.iter().map(|l| (2.0 * l).sqrt()).collect();
    let polys = basis
        .indices()
        .iter()
        .map(|k| hermite_tensor(k, &dil, true))
        .collect::<Result<_>>()?;
    Ok((basis, polys))
}

fn hermite_operator_matrix(model: &OUModel, cap: u32) -> Result<OperatorMatrix<f64>> {
    let lambda = normal_form_variances(model)?;
    let (basis, polys) = hermite_basis(&lambda, cap)?;
    let idx = basis.indices();
    let n = idx.len();
    let to_coords = |p: &SparsePolynomial<f64>| p.coordinates(idx).expect("degree is bounded by the cap");
    let cols: Vec<Vec<f64>> = polys.iter().map(to_coords).collect();
    let change = Matrix::from_fn(n, n, |i, j| cols[j][i]);
    let images: Vec<Vec<f64>> = polys
        .par_iter()
        .map(|h| {
            let image = apply_generator::<f64>(model, h)?;
            change.solve(&to_coords(&image))
        })
        .collect::<Result<_>>()?;
    Ok(OperatorMatrix {
        entries: Matrix::from_fn(n, n, |i, j| images[j][i]),
        basis,
        kind: BasisKind::HermiteNormalForm,
        tag: OperatorTag::Generator,
    })
}

/// Matrix of `𝓑 f = ⟨Bx, ∇f⟩` on homogeneous degree-`n` monomials, V-ordered.
pub fn homogeneous_drift_matrix<S: ModelScalar>(model: &OUModel, n: u32) -> Result<OperatorMatrix<S>> {
    let (_, b) = S::model_matrices(model)?;
    drift_matrix(&b, n, OperatorTag::Drift)
}

/// Matrix of `⟨Mx, ∇f⟩` on V-ordered homogeneous degree-`n` monomials.
pub fn drift_matrix<S: Scalar>(m: &Matrix<S>, n: u32, tag: OperatorTag) -> Result<OperatorMatrix<S>> {
    let basis = monomial_basis(m.nrows(), n, BasisOrdering::VNondecreasing, true);
    assemble(basis, tag, |p| drift_apply(m, p))
}

/// Matrix of `𝓢` on monomials of degree `≤ cap`, graded-lex.
pub fn diffusion_matrix<S: ModelScalar>(model: &OUModel, cap: u32) -> Result<OperatorMatrix<S>> {
    let (q, _) = S::model_matrices(model)?;
    let basis = monomial_basis(model.dim(), cap, BasisOrdering::GradedLex, false);
    assemble(basis, OperatorTag::Diffusion, |p| diffusion_apply(&q, p))
}

/// Splits a drift of the form `λI + R`, `R` supported on the first
/// subdiagonal, into `(λ, R)`.
pub fn jordan_split<S: Scalar>(b: &Matrix<S>) -> Result<(S, Matrix<S>)> {
    let n = b.nrows();
    let lambda = b[(0, 0)].clone();
    let mut r = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = &b[(i, j)];
            let ok = if i == j {
                *v == lambda
            } else if i == j + 1 {
                r[(i, j)] = v.clone();
                true
            } else {
                v.is_zero()
            };
            if !ok {
                return Err(Error::InvalidParams(format!(
                    "drift is not λI plus a subdiagonal part: entry ({i},{j}) = {}",
                    v.to_text()
                )));
            }
        }
    }
    Ok((lambda, r))
}

/// Matrix of `𝓡` for a Jordan-type drift on V-ordered homogeneous degree-`n`
/// monomials; it maps `x^α` to `Σ_i α_i·R_{i,i−1}·x^{α+e_{i−1}−e_i}`.
pub fn nilpotent_part_matrix<S: Scalar>(b: &Matrix<S>, n: u32) -> Result<OperatorMatrix<S>> {
    let (_, r) = jordan_split(b)?;
    drift_matrix(&r, n, OperatorTag::Nilpotent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::MultiIndex;
    use crate::scalar::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn triangular(a: i64, d: i64, c: i64) -> OUModel {
        OUModel::from_ratios(
            &[&[(1, 1), (0, 1)], &[(0, 1), (1, 1)]],
            &[&[(-a + d, 1), (0, 1)], &[(c, 1), (-a - d, 1)]],
        )
        .unwrap()
    }

    #[test]
    fn constants_are_annihilated() {
        let m = triangular(2, 1, 1);
        let out = apply_generator::<Rational>(&m, &SparsePolynomial::one(2)).unwrap();
        assert!(out.is_zero());
    }

    #[test]
    fn linear_function() {
        let m = triangular(2, 1, 1);
        let x1 = SparsePolynomial::<Rational>::variable(2, 0);
        let out = apply_generator(&m, &x1).unwrap();
        assert_eq!(out, x1.scale(&r(-1, 1)));
    }

    #[test]
    fn diffusion_of_square() {
        let q = Matrix::from_rows(vec![vec![r(2, 1), r(1, 1)], vec![r(1, 1), r(3, 1)]]).unwrap();
        let p = SparsePolynomial::from_terms(2, [(vec![1, 1], r(1, 1))]).unwrap();
        // ½(Q12 + Q21) = 1
        assert_eq!(diffusion_apply(&q, &p).unwrap(), SparsePolynomial::one(2));
    }

    #[test]
    fn constant_block_is_zero() {
        let m = triangular(2, 1, 1);
        let op = monomial_operator_matrix::<Rational>(&m, 0, BasisOrdering::GradedLex).unwrap();
        assert_eq!(op.entries, Matrix::zeros(1, 1));
    }

    #[test]
    fn scalar_drift_gives_euler_identity() {
        let m = OUModel::from_ratios(
            &[&[(1, 1), (0, 1)], &[(0, 1), (1, 1)]],
            &[&[(-3, 2), (0, 1)], &[(0, 1), (-3, 2)]],
        )
        .unwrap();
        for n in 0..5 {
            let op = homogeneous_drift_matrix::<Rational>(&m, n).unwrap();
            let size = op.size();
            assert_eq!(op.entries, Matrix::identity(size).scale(&r(-3 * n as i64, 2)));
        }
    }

    #[test]
    fn nilpotent_action_on_example() {
        let b = Matrix::from_rows(vec![vec![r(-1, 1), r(0, 1)], vec![r(1, 1), r(-1, 1)]]).unwrap();
        let op = nilpotent_part_matrix(&b, 2).unwrap();
        let idx = op.basis.indices();
        let col = op.basis.position(&MultiIndex::new(vec![0, 2])).unwrap();
        let row = op.basis.position(&MultiIndex::new(vec![1, 1])).unwrap();
        assert_eq!(op.entries[(row, col)], r(2, 1));
        for i in 0..idx.len() {
            for j in 0..=i {
                assert_eq!(op.entries[(i, j)], r(0, 1));
            }
        }
    }

    #[test]
    fn hermite_basis_requires_normal_form() {
        let m = OUModel::from_rows(&[&[2.0, 0.0], &[0.0, 1.0]], &[&[-1.0, 0.0], &[0.0, -1.0]]).unwrap();
        assert!(matches!(
            operator_matrix(&m, 2, BasisKind::HermiteNormalForm),
            Err(Error::BasisUnavailable(_))
        ));
    }

    #[test]
    fn degree_is_never_raised() {
        let m = triangular(3, 1, 2);
        let op = monomial_operator_matrix::<Rational>(&m, 4, BasisOrdering::GradedLex).unwrap();
        assert_eq!(op.degree_raising_mass(), 0.0);
    }
}
