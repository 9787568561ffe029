use nalgebra::{DMatrix, SVD};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{spectrum, SpectrumSet, TOL_EIG, TOL_NILP};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{format_c64, OUModel};
use crate::operator::monomial_operator_matrix;
use crate::polynomial::{monomial_basis, BasisOrdering, GradedBasis, MultiIndex, SparsePolynomial};
use crate::scalar::{Rational, Scalar, C64};

/// Largest basis the float pipeline accepts.
const MAX_BASIS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    pub tol_eig: f64,
    pub tol_nilp: f64,
    /// Singular values below `rank_rel·σ_max` count as zero.
    pub rank_rel: f64,
    /// Singular values strictly inside `(band.0·σ_max, band.1·σ_max)` make
    /// the rank decision ambiguous.
    pub band: (f64, f64),
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            tol_eig: TOL_EIG,
            tol_nilp: TOL_NILP,
            rank_rel: 1e-10,
            band: (1e-12, 1e-8),
        }
    }
}

/// Generalized eigenspace of one eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenGroup<S: Scalar> {
    pub eigenvalue: S,
    pub multiplicity: usize,
    /// Least `k` with `ker (M−μ)^k` stabilized.
    pub nilpotency_index: usize,
    /// `dim ker (M−μ)^j` for `j = 1..=k`.
    pub kernel_dims: Vec<usize>,
    pub witnesses: Vec<MultiIndex>,
    pub basis: Vec<SparsePolynomial<S>>,
    /// `max ‖(M−μ)^k u‖/‖u‖` over the basis.
    pub residual: f64,
}

impl<S: Scalar> EigenGroup<S> {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Whether this is the group of the constants.
    pub fn is_kernel(&self) -> bool {
        self.witnesses.iter().any(MultiIndex::is_zero)
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.basis.iter().map(|p| p.degree().unwrap_or(0)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition<S: Scalar> {
    pub cap: u32,
    pub dim: usize,
    pub groups: Vec<EigenGroup<S>>,
}

impl<S: Scalar> SpectralDecomposition<S> {
    pub fn total_dimension(&self) -> usize {
        self.groups.iter().map(EigenGroup::dimension).sum()
    }

    pub fn find(&self, mu: &S, tol: f64) -> Option<&EigenGroup<S>> {
        self.groups
            .iter()
            .find(|g| (g.eigenvalue.clone() - mu.clone()).magnitude() <= tol)
    }

    pub fn max_nilpotency_index(&self) -> usize {
        self.groups.iter().map(|g| g.nilpotency_index).max().unwrap_or(0)
    }

    pub fn eigenvalue_multiset(&self) -> Vec<C64> {
        self.groups
            .iter()
            .flat_map(|g| std::iter::repeat(g.eigenvalue.to_c64()).take(g.multiplicity))
            .collect()
    }
}

fn svd_sorted(a: DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let n = a.ncols();
    let svd = SVD::try_new(a, false, true, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::ConvergenceFailure("singular value decomposition".into()))?;
    let vt = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    // columns: right singular vectors in descending singular value order
    let v = DMatrix::from_fn(n, order.len(), |r, c| vt[(order[c], r)].conj());
    Ok((sv, v))
}

/// Orthonormal basis of the numerical kernel of `a`; `scale` is the
/// reference size for rank decisions.
fn kernel(a: DMatrix<C64>, scale: f64, mu: C64, opts: &SpectralOptions) -> Result<DMatrix<C64>> {
    let n = a.ncols();
    let (sv, v) = svd_sorted(a)?;
    let (lo, hi) = (opts.band.0 * scale, opts.band.1 * scale);
    if let Some(&bad) = sv.iter().find(|&&s| s > lo && s < hi) {
        return Err(Error::RankDecisionAmbiguous {
            eigenvalue: format_c64(mu),
            value: bad,
            low: lo,
            high: hi,
        });
    }
    let threshold = opts.rank_rel * scale;
    let rank = sv.iter().filter(|&&s| s > threshold).count();
    Ok(v.columns(rank, n - rank).into_owned())
}

/// Reduced echelon form of the row space. Columns are taken from the last
/// (highest degree) down, but a column may only pivot when its largest entry
/// is within a factor `PIVOT_THRESHOLD` of the largest remaining entry, which
/// bounds the elimination multipliers. Each vector gets a distinct leading
/// monomial with coefficient 1; entries below `tol` relative to the row's
/// size are dropped.
fn canonical_rows(mut rows: Vec<Vec<C64>>, tol: f64) -> Vec<Vec<C64>> {
    const PIVOT_THRESHOLD: f64 = 0.1;
    let n = rows.first().map_or(0, Vec::len);
    let mut used = vec![false; n];
    for r in 0..rows.len() {
        let col_max = |c: usize, rows: &[Vec<C64>]| {
            (r..rows.len())
                .map(|i| (i, rows[i][c].norm()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
        };
        let global = (0..n).filter(|&c| !used[c]).map(|c| col_max(c, &rows).1).fold(0.0, f64::max);
        if global == 0.0 {
            break;
        }
        let c = (0..n)
            .rev()
            .find(|&c| !used[c] && col_max(c, &rows).1 >= PIVOT_THRESHOLD * global)
            .expect("the global maximum qualifies");
        let (p, _) = col_max(c, &rows);
        used[c] = true;
        rows.swap(r, p);
        let inv = C64::new(1.0, 0.0) / rows[r][c];
        for z in rows[r].iter_mut() {
            *z *= inv;
        }
        rows[r][c] = C64::new(1.0, 0.0);
        for i in 0..rows.len() {
            if i == r {
                continue;
            }
            let f = rows[i][c];
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                let d = f * rows[r][j];
                rows[i][j] -= d;
            }
            rows[i][c] = C64::new(0.0, 0.0);
        }
    }
    for row in rows.iter_mut() {
        let s = row.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for z in row.iter_mut() {
            if z.re.abs() <= tol * s {
                z.re = 0.0;
            }
            if z.im.abs() <= tol * s {
                z.im = 0.0;
            }
        }
    }
    rows
}

fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn check_size(model: &OUModel, cap: u32) -> Result<GradedBasis> {
    let basis = monomial_basis(model.dim(), cap, BasisOrdering::GradedLex, false);
    if basis.len() > MAX_BASIS {
        return Err(Error::InvalidParams(format!(
            "degree cap {cap} in dimension {} gives {} basis monomials (limit {MAX_BASIS})",
            model.dim(),
            basis.len()
        )));
    }
    Ok(basis)
}

/// Generalized eigenspaces of the generator on polynomials of degree
/// `≤ cap`, in floating point.
///
/// For each `μ` of the enumerated spectrum the chain
/// `K_{j+1} = ker((I − P_j)(M − μ))`, `P_j` the orthogonal projector on
/// `K_j`, is followed until its dimension stops growing. The final dimension
/// must equal the multiplicity of `μ`.
pub fn generalized_eigenspaces(
    model: &OUModel,
    cap: u32,
    opts: &SpectralOptions,
) -> Result<SpectralDecomposition<C64>> {
    let basis = check_size(model, cap)?;
    let op = monomial_operator_matrix::<f64>(model, cap, BasisOrdering::GradedLex)?;
    debug_assert_eq!(op.basis.indices(), basis.indices());
    let spec: SpectrumSet = spectrum(model, cap, opts.tol_eig)?;
    let n = basis.len();
    let m: DMatrix<C64> = op.entries.lift::<C64>().to_nalgebra();
    let mut groups = Vec::with_capacity(spec.elements.len());
    for el in &spec.elements {
        let mu = el.value;
        let mult = el.multiplicity();
        let a0 = &m - DMatrix::<C64>::identity(n, n) * mu;
        let scale = {
            let (sv, _) = svd_sorted(a0.clone())?;
            sv.first().copied().filter(|&s| s > 0.0).unwrap_or(1.0)
        };
        let mut z: DMatrix<C64> = DMatrix::zeros(n, 0);
        let mut dims = Vec::new();
        for _ in 0..mult.max(1) {
            let a = if z.ncols() == 0 {
                a0.clone()
            } else {
                let proj = DMatrix::<C64>::identity(n, n) - &z * z.adjoint();
                proj * &a0
            };
            let k = kernel(a, scale, mu, opts)?;
            if k.ncols() <= z.ncols() {
                break;
            }
            z = k;
            dims.push(z.ncols());
            if z.ncols() >= mult {
                break;
            }
        }
        if z.ncols() != mult {
            return Err(Error::KernelDimensionMismatch {
                eigenvalue: format_c64(mu),
                expected: mult,
                found: z.ncols(),
            });
        }
        let index = dims.len();
        let rows: Vec<Vec<C64>> = (0..z.ncols()).map(|c| z.column(c).iter().copied().collect()).collect();
        let rows = canonical_rows(rows, 1e-12);
        let mut residual = 0.0f64;
        for row in &rows {
            let mut v = DMatrix::from_column_slice(n, 1, row);
            for _ in 0..index {
                v = &a0 * v;
            }
            residual = residual.max(v.norm() / vec_norm(row));
        }
        let polys = rows
            .iter()
            .map(|row| SparsePolynomial::from_coordinates(model.dim(), basis.indices(), row))
            .collect();
        groups.push(EigenGroup {
            eigenvalue: mu,
            multiplicity: mult,
            nilpotency_index: index,
            kernel_dims: dims,
            witnesses: el.witnesses.clone(),
            basis: polys,
            residual,
        });
    }
    Ok(SpectralDecomposition {
        cap,
        dim: model.dim(),
        groups,
    })
}

/// Exact generalized eigenspaces for a rational model with triangular drift,
/// from nullspaces of `(M − μ)^k` in rational arithmetic.
pub fn exact_generalized_eigenspaces(model: &OUModel, cap: u32) -> Result<SpectralDecomposition<Rational>> {
    let (_, b) = model.exact_matrices()?;
    if !(b.is_lower_triangular() || b.is_upper_triangular()) {
        return Err(Error::ExactUnavailable(
            "exact eigenspaces need a triangular drift with rational eigenvalues".into(),
        ));
    }
    let basis = check_size(model, cap)?;
    let op = monomial_operator_matrix::<Rational>(model, cap, BasisOrdering::GradedLex)?;
    let diag = b.diagonal_entries();
    let mut values: Vec<(Rational, Vec<MultiIndex>)> = Vec::new();
    for alpha in basis.indices() {
        let mu = alpha
            .exps()
            .iter()
            .zip(&diag)
            .fold(Rational::zero(), |acc, (&e, l)| acc + l.clone() * Rational::from_i64(e as i64));
        match values.iter_mut().find(|(v, _)| *v == mu) {
            Some((_, w)) => w.push(alpha.clone()),
            None => values.push((mu, vec![alpha.clone()])),
        }
    }
    values.sort_by(|a, b| {
        let da = a.1.iter().map(MultiIndex::degree).min();
        let db = b.1.iter().map(MultiIndex::degree).min();
        da.cmp(&db).then(b.0.cmp(&a.0))
    });
    let n = basis.len();
    let mut groups = Vec::with_capacity(values.len());
    for (mu, witnesses) in values {
        let mult = witnesses.len();
        let a = op.entries.sub(&Matrix::identity(n).scale(&mu));
        let mut power = a.clone();
        let mut dims = Vec::new();
        let mut null = power.nullspace();
        dims.push(null.len());
        while null.len() < mult && dims.len() < mult {
            power = power.mul(&a);
            let next = power.nullspace();
            if next.len() == null.len() {
                break;
            }
            null = next;
            dims.push(null.len());
        }
        if null.len() != mult {
            return Err(Error::KernelDimensionMismatch {
                eigenvalue: mu.to_text(),
                expected: mult,
                found: null.len(),
            });
        }
        // echelon form pivoting on the highest-degree monomials
        let reversed = Matrix::from_fn(null.len(), n, |i, j| null[i][n - 1 - j].clone());
        let (r, pivots) = reversed.rref();
        let polys = (0..pivots.len())
            .map(|i| {
                let coords: Vec<Rational> = (0..n).map(|j| r[(i, n - 1 - j)].clone()).collect();
                SparsePolynomial::from_coordinates(model.dim(), basis.indices(), &coords)
            })
            .collect();
        groups.push(EigenGroup {
            eigenvalue: mu,
            multiplicity: mult,
            nilpotency_index: dims.len(),
            kernel_dims: dims,
            witnesses,
            basis: polys,
            residual: 0.0,
        });
    }
    Ok(SpectralDecomposition {
        cap,
        dim: model.dim(),
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn constants_form_the_kernel() {
        let m = OUModel::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[-1.0, 1.0], &[-1.0, -1.0]]).unwrap();
        let dec = generalized_eigenspaces(&m, 3, &SpectralOptions::default()).unwrap();
        let g = &dec.groups[0];
        assert!(g.is_kernel());
        assert_eq!(g.dimension(), 1);
        assert_eq!(g.basis[0], SparsePolynomial::one(2));
        assert_eq!(dec.total_dimension(), 10);
        assert_eq!(dec.max_nilpotency_index(), 1);
    }

    #[test]
    fn jordan_drift_float_and_exact_agree_on_structure() {
        let m = OUModel::from_ratios(
            &[&[(1, 1), (0, 1)], &[(0, 1), (1, 1)]],
            &[&[(-1, 1), (1, 1)], &[(0, 1), (-1, 1)]],
        )
        .unwrap();
        let f = generalized_eigenspaces(&m, 3, &SpectralOptions::default()).unwrap();
        let e = exact_generalized_eigenspaces(&m, 3).unwrap();
        assert_eq!(f.groups.len(), 4);
        assert_eq!(e.groups.len(), 4);
        for (gf, ge) in f.groups.iter().zip(&e.groups) {
            assert_eq!(gf.multiplicity, ge.multiplicity);
            assert_eq!(gf.nilpotency_index, ge.nilpotency_index);
            assert!((gf.eigenvalue - ge.eigenvalue.to_c64()).norm() < 1e-12);
        }
        // degree one: λ = -1 with one Jordan block of size 2
        assert_eq!(e.groups[1].eigenvalue, r(-1, 1));
        assert_eq!(e.groups[1].kernel_dims, vec![1, 2]);
    }

    #[test]
    fn triangular_eigenfunction_recovered_exactly() {
        // v1 = x1² − 1/(2(a−d)) at −2(a−d) for (a, d, c) = (2, 1, 1)
        let m = OUModel::from_ratios(
            &[&[(1, 1), (0, 1)], &[(0, 1), (1, 1)]],
            &[&[(-1, 1), (0, 1)], &[(1, 1), (-3, 1)]],
        )
        .unwrap();
        let e = exact_generalized_eigenspaces(&m, 2).unwrap();
        let g = e.find(&r(-2, 1), 0.0).unwrap();
        let v1 = SparsePolynomial::from_terms(2, [(vec![2, 0], r(1, 1)), (vec![0, 0], r(-1, 2))]).unwrap();
        assert_eq!(g.basis, vec![v1]);
    }
}
