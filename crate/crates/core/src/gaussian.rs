//! Centered Gaussian measures, moments by the Isserlis recursion and the
//! `L²(γ)` pairing of polynomials.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::CovarianceMatrix;
use crate::polynomial::{MultiIndex, SparsePolynomial};
use crate::scalar::{Rational, Scalar};

/// Centered Gaussian `N(0, Σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure {
    covariance: Matrix<f64>,
    exact: Option<Matrix<Rational>>,
}

impl GaussianMeasure {
    pub fn new(cov: &CovarianceMatrix) -> Self {
        GaussianMeasure {
            covariance: cov.sigma.clone(),
            exact: cov.exact.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn covariance(&self) -> &Matrix<f64> {
        &self.covariance
    }

    pub fn exact_covariance(&self) -> Option<&Matrix<Rational>> {
        self.exact.as_ref()
    }

    /// `(2π)^{−N/2} (det Σ)^{−1/2}`.
    pub fn normalization(&self) -> f64 {
        let n = self.dim() as f64;
        (2.0 * std::f64::consts::PI).powf(-n / 2.0) / self.covariance.determinant().sqrt()
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let y = self.covariance.solve(x)?;
        let quad: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        Ok(self.normalization() * (-0.5 * quad).exp())
    }
}

/// Memoized moments `E[x^α]` under one covariance.
#[derive(Debug, Clone)]
pub struct MomentTable<'a, S> {
    sigma: &'a Matrix<S>,
    memo: HashMap<MultiIndex, S>,
}

impl<'a, S: Scalar> MomentTable<'a, S> {
    pub fn new(sigma: &'a Matrix<S>) -> Result<Self> {
        if !sigma.is_square() {
            return Err(Error::NotSquare {
                what: "covariance",
                rows: sigma.nrows(),
                cols: sigma.ncols(),
            });
        }
        Ok(MomentTable {
            sigma,
            memo: HashMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    /// `E[x^α]` via `E[x_i x^β] = Σ_j Σ_ij β_j E[x^{β−e_j}]`.
    pub fn moment(&mut self, alpha: &MultiIndex) -> Result<S> {
        if alpha.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: alpha.dim(),
            });
        }
        Ok(self.eval(alpha))
    }

    fn eval(&mut self, alpha: &MultiIndex) -> S {
        if alpha.degree() % 2 == 1 {
            return S::zero();
        }
        if alpha.is_zero() {
            return S::one();
        }
        if let Some(v) = self.memo.get(alpha) {
            return v.clone();
        }
        let i = alpha.exps().iter().position(|&e| e > 0).unwrap();
        let beta = alpha.lower(i).unwrap();
        let mut total = S::zero();
        for j in 0..self.dim() {
            let bj = beta.get(j);
            if bj == 0 || self.sigma[(i, j)].is_zero() {
                continue;
            }
            let rest = beta.lower(j).unwrap();
            let m = self.eval(&rest);
            total = total + self.sigma[(i, j)].clone() * S::from_i64(bj as i64) * m;
        }
        self.memo.insert(alpha.clone(), total.clone());
        total
    }

    /// `∫ p dγ`.
    pub fn expectation(&mut self, p: &SparsePolynomial<S>) -> Result<S> {
        self.check_dim(p.dim())?;
        let mut total = S::zero();
        for (alpha, c) in p.terms() {
            total = total + c.clone() * self.eval(alpha);
        }
        Ok(total)
    }

    /// `⟨p, q⟩ = ∫ p·conj(q) dγ`.
    pub fn pairing(&mut self, p: &SparsePolynomial<S>, q: &SparsePolynomial<S>) -> Result<S> {
        self.check_dim(p.dim())?;
        self.check_dim(q.dim())?;
        let mut combined: BTreeMap<MultiIndex, S> = BTreeMap::new();
        for (a, ca) in p.terms() {
            for (b, cb) in q.terms() {
                let k = a.add(b);
                if k.degree() % 2 == 1 {
                    continue;
                }
                let v = ca.clone() * cb.conj();
                match combined.get_mut(&k) {
                    Some(acc) => *acc = acc.clone() + v,
                    None => {
                        combined.insert(k, v);
                    }
                }
            }
        }
        let mut total = S::zero();
        for (k, c) in combined {
            total = total + c * self.eval(&k);
        }
        Ok(total)
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }
}

/// `E[x^α]` under `N(0, Σ)`.
pub fn gaussian_moment<S: Scalar>(sigma: &Matrix<S>, alpha: &MultiIndex) -> Result<S> {
    MomentTable::new(sigma)?.moment(alpha)
}

/// The sesquilinear pairing `∫ p·conj(q) dN(0, Σ)`.
pub fn inner_product<S: Scalar>(
    p: &SparsePolynomial<S>,
    q: &SparsePolynomial<S>,
    sigma: &Matrix<S>,
) -> Result<S> {
    MomentTable::new(sigma)?.pairing(p, q)
}

/// `G[i][j] = ⟨f_i, f_j⟩`, Hermitian by construction.
pub fn gram_matrix<S: Scalar>(fs: &[SparsePolynomial<S>], sigma: &Matrix<S>) -> Result<Matrix<S>> {
    let mut table = MomentTable::new(sigma)?;
    let n = fs.len();
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = table.pairing(&fs[i], &fs[j])?;
            if i != j {
                g[(j, i)] = v.conj();
            }
            g[(i, j)] = v;
        }
    }
    Ok(g)
}

/// `⟨f_i, g_j⟩` for two families.
pub fn cross_gram<S: Scalar>(
    fs: &[SparsePolynomial<S>],
    gs: &[SparsePolynomial<S>],
    sigma: &Matrix<S>,
) -> Result<Matrix<S>> {
    let mut table = MomentTable::new(sigma)?;
    let mut g = Matrix::zeros(fs.len(), gs.len());
    for (i, f) in fs.iter().enumerate() {
        for (j, h) in gs.iter().enumerate() {
            g[(i, j)] = table.pairing(f, h)?;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::C64;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn half_identity() -> Matrix<Rational> {
        Matrix::diagonal(&[r(1, 2), r(1, 2)])
    }

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec())
    }

    #[test]
    fn independent_coordinates() {
        let s = half_identity();
        assert_eq!(gaussian_moment(&s, &mi(&[2, 0])).unwrap(), r(1, 2));
        assert_eq!(gaussian_moment(&s, &mi(&[4, 0])).unwrap(), r(3, 4));
        assert_eq!(gaussian_moment(&s, &mi(&[2, 2])).unwrap(), r(1, 4));
        assert_eq!(gaussian_moment(&s, &mi(&[3, 2])).unwrap(), r(0, 1));
        assert_eq!(gaussian_moment(&s, &mi(&[0, 0])).unwrap(), r(1, 1));
    }

    #[test]
    fn correlated_second_moment() {
        let s = Matrix::from_rows(vec![vec![r(1, 2), r(1, 8)], vec![r(1, 8), r(5, 24)]]).unwrap();
        assert_eq!(gaussian_moment(&s, &mi(&[1, 1])).unwrap(), r(1, 8));
        // E[x²y²] = σ11σ22 + 2σ12²
        assert_eq!(
            gaussian_moment(&s, &mi(&[2, 2])).unwrap(),
            r(1, 2) * r(5, 24) + r(2, 1) * r(1, 64)
        );
    }

    #[test]
    fn one_dimensional_moments_match_quadrature() {
        let s = Matrix::diagonal(&[0.5]);
        let sd = 0.5f64.sqrt();
        for k in [2u32, 4, 6, 8] {
            // trapezoid on [-12σ, 12σ]
            let steps = 20_000;
            let (lo, hi) = (-12.0 * sd, 12.0 * sd);
            let h = (hi - lo) / steps as f64;
            let f = |x: f64| x.powi(k as i32) * (-x * x).exp() / std::f64::consts::PI.sqrt();
            let mut quad = 0.5 * (f(lo) + f(hi));
            for i in 1..steps {
                quad += f(lo + i as f64 * h);
            }
            quad *= h;
            let m = gaussian_moment(&s, &mi(&[k])).unwrap();
            assert!((m - quad).abs() < 1e-10 * m.max(1.0), "k={k}: {m} vs {quad}");
        }
    }

    #[test]
    fn pairing_is_sesquilinear() {
        let s: Matrix<C64> = Matrix::<f64>::diagonal(&[0.5, 0.5]).lift();
        let x1 = SparsePolynomial::<C64>::variable(2, 0);
        let i = C64::new(0.0, 1.0);
        let p = x1.scale(&i);
        let v = inner_product(&p, &x1, &s).unwrap();
        assert_eq!(v, C64::new(0.0, 0.5));
        let w = inner_product(&x1, &p, &s).unwrap();
        assert_eq!(w, C64::new(0.0, -0.5));
    }

    #[test]
    fn gram_of_constant_and_mismatch() {
        let s = half_identity();
        let g = gram_matrix(&[SparsePolynomial::one(2)], &s).unwrap();
        assert_eq!(g, Matrix::identity(1));
        let err = inner_product(&SparsePolynomial::one(3), &SparsePolynomial::one(2), &s);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }
}
