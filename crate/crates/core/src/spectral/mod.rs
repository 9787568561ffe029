//! Drift eigenvalues, the spectrum set `{Σ n_j λ_j}`, generalized
//! eigenspaces of the generator on polynomials of bounded degree, and
//! orthogonality reports.

mod eigenspaces;
mod orthogonality;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{complex_schur, sort_spectrum, OUModel};
use crate::operator::drift_apply;
use crate::polynomial::{monomial_basis, BasisOrdering, MultiIndex, SparsePolynomial};
use crate::scalar::C64;

pub use crate::model::drift_eigenvalues;
pub use eigenspaces::{
    exact_generalized_eigenspaces, generalized_eigenspaces, EigenGroup, SpectralDecomposition,
    SpectralOptions,
};
pub use orthogonality::{orthogonality_report, OrthogonalityReport, PairReport};

pub const TOL_EIG: f64 = 1e-8;
pub const TOL_ORTH: f64 = 1e-9;
pub const TOL_NILP: f64 = 1e-9;

/// One value `μ = Σ n_j λ_j` with every exponent vector producing it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumElement {
    pub value: C64,
    pub witnesses: Vec<MultiIndex>,
    /// Smallest `Σ n_j` among the witnesses.
    pub degree: u32,
}

impl SpectrumElement {
    /// Number of witnesses, i.e. the algebraic multiplicity of `μ` for the
    /// generator restricted to degree `≤ cap`.
    pub fn multiplicity(&self) -> usize {
        self.witnesses.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSet {
    pub cap: u32,
    pub tol_eig: f64,
    pub drift_eigenvalues: Vec<C64>,
    pub elements: Vec<SpectrumElement>,
}

impl SpectrumSet {
    /// All values repeated by multiplicity.
    pub fn multiset(&self) -> Vec<C64> {
        self.elements
            .iter()
            .flat_map(|e| std::iter::repeat(e.value).take(e.multiplicity()))
            .collect()
    }

    pub fn find(&self, mu: C64) -> Option<&SpectrumElement> {
        self.elements.iter().find(|e| (e.value - mu).norm() <= self.tol_eig)
    }
}

/// Groups `Σ n_j λ_j` over `|n| ≤ cap`, merging values within `tol_eig`.
pub fn spectrum_from_eigenvalues(lambdas: &[C64], cap: u32, tol_eig: f64) -> SpectrumSet {
    let basis = monomial_basis(lambdas.len(), cap, BasisOrdering::GradedLex, false);
    let mut clusters: Vec<(C64, Vec<MultiIndex>)> = Vec::new();
    for alpha in basis.indices() {
        let mu: C64 = alpha
            .exps()
            .iter()
            .zip(lambdas)
            .map(|(&n, l)| l * n as f64)
            .sum();
        let mean = |c: &(C64, Vec<MultiIndex>)| c.0 / c.1.len() as f64;
        match clusters.iter_mut().find(|c| (mean(c) - mu).norm() <= tol_eig) {
            Some(c) => {
                c.0 += mu;
                c.1.push(alpha.clone());
            }
            None => clusters.push((mu, vec![alpha.clone()])),
        }
    }
    let mut elements: Vec<SpectrumElement> = clusters
        .into_iter()
        .map(|(sum, witnesses)| SpectrumElement {
            value: sum / witnesses.len() as f64,
            degree: witnesses.iter().map(MultiIndex::degree).min().unwrap_or(0),
            witnesses,
        })
        .collect();
    elements.sort_by(|a, b| {
        a.degree
            .cmp(&b.degree)
            .then(b.value.re.total_cmp(&a.value.re))
            .then(b.value.im.total_cmp(&a.value.im))
    });
    SpectrumSet {
        cap,
        tol_eig,
        drift_eigenvalues: lambdas.to_vec(),
        elements,
    }
}

/// The set `{Σ n_j λ_j : Σ n_j ≤ cap}` over the drift eigenvalues.
pub fn spectrum(model: &OUModel, cap: u32, tol_eig: f64) -> Result<SpectrumSet> {
    let lambdas = drift_eigenvalues(model.b())?;
    Ok(spectrum_from_eigenvalues(&lambdas, cap, tol_eig))
}

/// Eigenvalues of the generator on polynomials of degree `≤ cap`, read off
/// the diagonal of its matrix in complex Schur coordinates `y = U*x`, where
/// the matrix is triangular.
///
/// Also returns the largest entry below the diagonal, which is zero up to
/// rounding.
pub fn operator_eigenvalues(model: &OUModel, cap: u32) -> Result<(Vec<C64>, f64)> {
    let schur = complex_schur(model.b())?;
    let t = &schur.t;
    let n = model.dim();
    let mut values = Vec::new();
    let mut below = 0.0f64;
    for d in 0..=cap {
        let mut idx = crate::polynomial::exponents_of_degree(n, d);
        idx.sort_by_key(|a| std::cmp::Reverse(a.v_order()));
        let size = idx.len();
        let mut block: Matrix<C64> = Matrix::zeros(size, size);
        for (j, alpha) in idx.iter().enumerate() {
            let image = drift_apply(t, &SparsePolynomial::monomial(alpha.clone(), C64::new(1.0, 0.0)))?;
            for (beta, c) in image.terms() {
                let i = idx.iter().position(|g| g == beta).ok_or_else(|| {
                    Error::BasisUnavailable("drift image leaves the homogeneous space".into())
                })?;
                block[(i, j)] = *c;
            }
        }
        for i in 0..size {
            for j in 0..i {
                below = below.max(block[(i, j)].norm());
            }
        }
        values.extend(block.diagonal_entries());
    }
    sort_spectrum(&mut values);
    Ok((values, below))
}

/// Angle in `[0, π/2]` between the two real eigenvector lines of a 2×2 drift.
pub fn b_eigenvector_angle(b: &Matrix<f64>) -> Result<f64> {
    if b.nrows() != 2 || b.ncols() != 2 {
        return Err(Error::UnsupportedDimension {
            expected: 2,
            found: b.nrows(),
        });
    }
    let eigs = drift_eigenvalues(b)?;
    if eigs.iter().any(|z| z.im != 0.0) {
        return Err(Error::ComplexSpectrum(format!("{} and {}", eigs[0], eigs[1])));
    }
    let scale = b.max_abs().max(f64::MIN_POSITIVE);
    if (eigs[0].re - eigs[1].re).abs() <= 1e-12 * scale {
        return Err(Error::RepeatedEigenvalue(format!("{}", eigs[0].re)));
    }
    let vector = |l: f64| {
        let u = [b[(0, 1)], l - b[(0, 0)]];
        let v = [l - b[(1, 1)], b[(1, 0)]];
        let norm = |w: &[f64; 2]| w[0].hypot(w[1]);
        if norm(&u) >= norm(&v) {
            u
        } else {
            v
        }
    };
    let (u, v) = (vector(eigs[0].re), vector(eigs[1].re));
    let cos = (u[0] * v[0] + u[1] * v[1]).abs() / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
    Ok(cos.min(1.0).acos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn values(s: &SpectrumSet) -> Vec<C64> {
        s.elements.iter().map(|e| e.value).collect()
    }

    #[test]
    fn rotating_spectrum_to_degree_two() {
        let m = OUModel::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[-1.0, 1.0], &[-1.0, -1.0]]).unwrap();
        let s = spectrum(&m, 2, TOL_EIG).unwrap();
        let expect = [
            C64::new(0.0, 0.0),
            C64::new(-1.0, 1.0),
            C64::new(-1.0, -1.0),
            C64::new(-2.0, 2.0),
            C64::new(-2.0, 0.0),
            C64::new(-2.0, -2.0),
        ];
        let got = values(&s);
        assert_eq!(got.len(), expect.len());
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).norm() < 1e-12, "{g} vs {e}");
        }
        assert_eq!(s.elements[0].witnesses, vec![MultiIndex::zero(2)]);
    }

    #[test]
    fn triangular_spectrum_to_degree_two() {
        let m = OUModel::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[-1.0, 0.0], &[1.0, -3.0]]).unwrap();
        let s = spectrum(&m, 2, TOL_EIG).unwrap();
        let got: Vec<f64> = values(&s).iter().map(|z| z.re).collect();
        assert_eq!(got, vec![0.0, -1.0, -3.0, -2.0, -4.0, -6.0]);
        assert_eq!(spectrum(&m, 0, TOL_EIG).unwrap().multiset(), vec![C64::new(0.0, 0.0)]);
    }

    #[test]
    fn resonances_merge() {
        // λ = -1, -2: 2·(-1) = -2 collides at degree 1 and 2
        let s = spectrum_from_eigenvalues(&[C64::new(-1.0, 0.0), C64::new(-2.0, 0.0)], 2, TOL_EIG);
        let e = s.find(C64::new(-2.0, 0.0)).unwrap();
        assert_eq!(e.multiplicity(), 2);
        assert_eq!(e.degree, 1);
    }

    #[test]
    fn schur_diagonal_matches_enumeration() {
        let m = OUModel::from_rows(
            &[&[1.0, 0.2, 0.0], &[0.2, 1.0, 0.1], &[0.0, 0.1, 2.0]],
            &[&[-1.0, 2.0, 0.0], &[-1.5, -1.0, 0.3], &[0.2, 0.0, -0.5]],
        )
        .unwrap();
        let (mut ops, below) = operator_eigenvalues(&m, 3).unwrap();
        assert!(below < 1e-12);
        let mut enumerated = spectrum(&m, 3, TOL_EIG).unwrap().multiset();
        sort_spectrum(&mut ops);
        sort_spectrum(&mut enumerated);
        for (a, b) in ops.iter().zip(&enumerated) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn eigenvector_angles() {
        let d = Matrix::from_rows(vec![vec![-1.0, 0.0], vec![0.0, -2.0]]).unwrap();
        assert!((b_eigenvector_angle(&d).unwrap() - FRAC_PI_2).abs() < 1e-15);
        let t = Matrix::from_rows(vec![vec![-1.0, 0.0], vec![1.0, -3.0]]).unwrap();
        let angle = b_eigenvector_angle(&t).unwrap();
        // eigenvectors (1, 1/2) and (0, 1)
        let expect = (0.5 / 1.25f64.sqrt()).acos();
        assert!((angle - expect).abs() < 1e-14);
        let r = Matrix::from_rows(vec![vec![-1.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        assert!(matches!(b_eigenvector_angle(&r), Err(Error::ComplexSpectrum(_))));
        let j = Matrix::from_rows(vec![vec![-1.0, 1.0], vec![0.0, -1.0]]).unwrap();
        assert!(matches!(b_eigenvector_angle(&j), Err(Error::RepeatedEigenvalue(_))));
    }
}
