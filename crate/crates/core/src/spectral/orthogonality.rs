use super::{EigenGroup, SpectralDecomposition};
use crate::error::Result;
use crate::gaussian::MomentTable;
use crate::matrix::Matrix;
use crate::polynomial::SparsePolynomial;
use crate::scalar::Scalar;

/// Cross Gram block between two eigenvalue groups.
#[derive(Debug, Clone, PartialEq)]
pub struct PairReport<S> {
    pub first: usize,
    pub second: usize,
    pub eigenvalues: (S, S),
    /// `gram[(i, j)] = ⟨u_i, v_j⟩`.
    pub gram: Matrix<S>,
    /// `max |⟨u,v⟩| / (‖u‖‖v‖)`.
    pub max_normalized: f64,
    pub orthogonal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalityReport<S> {
    pub tol_orth: f64,
    /// Verdicts use exact zero tests instead of `tol_orth`.
    pub exact: bool,
    pub pairs: Vec<PairReport<S>>,
    pub orthogonal: bool,
    /// `max |⟨1, u⟩| / ‖u‖` over basis vectors of groups other than the
    /// constants.
    pub mean_defect: f64,
    pub mean_zero: bool,
}

impl<S: Scalar> OrthogonalityReport<S> {
    pub fn pair(&self, first: usize, second: usize) -> Option<&PairReport<S>> {
        self.pairs
            .iter()
            .find(|p| (p.first, p.second) == (first, second) || (p.first, p.second) == (second, first))
    }

    pub fn max_normalized(&self) -> f64 {
        self.pairs.iter().map(|p| p.max_normalized).fold(0.0, f64::max)
    }
}

/// Pairwise Gram data between distinct eigenvalue groups under `N(0, Σ)`.
///
/// Exact backends declare a pair orthogonal only when every entry is zero;
/// float backends compare the normalized entries against `tol_orth`.
pub fn orthogonality_report<S: Scalar>(
    dec: &SpectralDecomposition<S>,
    sigma: &Matrix<S>,
    tol_orth: f64,
) -> Result<OrthogonalityReport<S>> {
    let mut table = MomentTable::new(sigma)?;
    let norms: Vec<Vec<f64>> = dec
        .groups
        .iter()
        .map(|g| {
            g.basis
                .iter()
                .map(|u| table.pairing(u, u).map(|v| v.magnitude().sqrt()))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let one = SparsePolynomial::one(dec.dim);
    let mut mean_defect = 0.0f64;
    let mut mean_exact_zero = true;
    for (g, ns) in dec.groups.iter().zip(&norms) {
        if g.is_kernel() {
            continue;
        }
        for (u, nu) in g.basis.iter().zip(ns) {
            let m = table.pairing(&one, u)?;
            mean_exact_zero &= m.is_zero();
            mean_defect = mean_defect.max(m.magnitude() / nu);
        }
    }
    let mut pairs = Vec::new();
    for i in 0..dec.groups.len() {
        for j in i + 1..dec.groups.len() {
            pairs.push(pair_report(&mut table, &dec.groups, &norms, i, j, tol_orth)?);
        }
    }
    let orthogonal = pairs.iter().all(|p| p.orthogonal);
    Ok(OrthogonalityReport {
        tol_orth,
        exact: S::EXACT,
        pairs,
        orthogonal,
        mean_defect,
        mean_zero: if S::EXACT { mean_exact_zero } else { mean_defect < tol_orth },
    })
}

fn pair_report<S: Scalar>(
    table: &mut MomentTable<'_, S>,
    groups: &[EigenGroup<S>],
    norms: &[Vec<f64>],
    i: usize,
    j: usize,
    tol: f64,
) -> Result<PairReport<S>> {
    let (a, b) = (&groups[i], &groups[j]);
    let mut gram = Matrix::zeros(a.basis.len(), b.basis.len());
    let mut worst = 0.0f64;
    let mut all_zero = true;
    for (r, u) in a.basis.iter().enumerate() {
        for (c, v) in b.basis.iter().enumerate() {
            let g = table.pairing(u, v)?;
            all_zero &= g.is_zero();
            worst = worst.max(g.magnitude() / (norms[i][r] * norms[j][c]));
            gram[(r, c)] = g;
        }
    }
    Ok(PairReport {
        first: i,
        second: j,
        eigenvalues: (a.eigenvalue.clone(), b.eigenvalue.clone()),
        gram,
        max_normalized: worst,
        orthogonal: if S::EXACT { all_zero } else { worst < tol },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{solve_lyapunov, OUModel};
    use crate::scalar::{Rational, C64};
    use crate::spectral::{exact_generalized_eigenspaces, generalized_eigenspaces, SpectralOptions, TOL_ORTH};

    #[test]
    fn triangular_model_is_not_orthogonal() {
        let m = OUModel::from_ratios(
            &[&[(1, 1), (0, 1)], &[(0, 1), (1, 1)]],
            &[&[(-1, 1), (0, 1)], &[(1, 1), (-3, 1)]],
        )
        .unwrap();
        let dec = exact_generalized_eigenspaces(&m, 2).unwrap();
        let q_inf = solve_lyapunov(&m).unwrap().exact.unwrap();
        let rep = orthogonality_report(&dec, &q_inf, TOL_ORTH).unwrap();
        assert!(!rep.orthogonal);
        assert!(rep.mean_zero);
        let i = dec.groups.iter().position(|g| g.eigenvalue == Rational::from_i64(-2)).unwrap();
        let j = dec.groups.iter().position(|g| g.eigenvalue == Rational::from_i64(-6)).unwrap();
        let p = rep.pair(i, j).unwrap();
        assert!(!p.orthogonal);
    }

    #[test]
    fn rotating_model_is_orthogonal() {
        let m = OUModel::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[-1.0, 1.0], &[-1.0, -1.0]]).unwrap();
        let dec = generalized_eigenspaces(&m, 4, &SpectralOptions::default()).unwrap();
        let q: Matrix<C64> = solve_lyapunov(&m).unwrap().sigma.lift();
        let rep = orthogonality_report(&dec, &q, TOL_ORTH).unwrap();
        assert!(rep.orthogonal, "max {}", rep.max_normalized());
        assert!(rep.mean_zero);
    }
}
