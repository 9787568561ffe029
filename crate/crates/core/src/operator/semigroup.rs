//! Closed-form action of the semigroup `H_t f(x) = E f(e^{tB}x + Y)`,
//! `Y ~ N(0, Q_t)`, on polynomials.

use crate::error::{Error, Result};
use crate::gaussian::MomentTable;
use crate::model::{covariance_at, matrix_exponential, OUModel};
use crate::polynomial::{exponents_of_degree, SparsePolynomial};

/// `H_t p`, computed as `Σ_β E[Y^β]/β! · (∂^β p)(e^{tB}x)`.
pub fn semigroup_apply(model: &OUModel, t: f64, p: &SparsePolynomial<f64>) -> Result<SparsePolynomial<f64>> {
    let n = model.dim();
    if p.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.dim(),
        });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParams(format!("time must be nonnegative and finite, got {t}")));
    }
    if t == 0.0 {
        return Ok(p.clone());
    }
    let qt = covariance_at(model, t)?.sigma;
    let mut moments = MomentTable::new(&qt)?;
    let deg = p.degree().unwrap_or(0);
    let mut smoothed = SparsePolynomial::zero(n);
    for d in (0..=deg).step_by(2) {
        for beta in exponents_of_degree(n, d) {
            let m = moments.moment(&beta)?;
            if m == 0.0 {
                continue;
            }
            let mut deriv = p.clone();
            for (i, &e) in beta.exps().iter().enumerate() {
                for _ in 0..e {
                    deriv = deriv.derivative(i);
                }
            }
            smoothed = smoothed + deriv.scale(&(m / beta.factorial() as f64));
        }
    }
    smoothed.substitute_linear(&matrix_exponential(model.b(), t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_are_fixed() {
        let m = OUModel::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[-1.0, 1.0], &[-1.0, -1.0]]).unwrap();
        let one = SparsePolynomial::<f64>::one(2);
        assert_eq!(semigroup_apply(&m, 0.8, &one).unwrap(), one);
    }

    #[test]
    fn linear_decay() {
        let m = OUModel::from_rows(&[&[1.0]], &[&[-1.0]]).unwrap();
        let x = SparsePolynomial::<f64>::variable(1, 0);
        let out = semigroup_apply(&m, 0.5, &x).unwrap();
        assert!((out.coefficient(&crate::polynomial::MultiIndex::new(vec![1])) - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn square_picks_up_variance() {
        // H_t x² = e^{-2t}x² + (1 - e^{-2t})/2
        let m = OUModel::from_rows(&[&[1.0]], &[&[-1.0]]).unwrap();
        let x2 = SparsePolynomial::from_terms(1, [(vec![2], 1.0)]).unwrap();
        let t = 0.3;
        let out = semigroup_apply(&m, t, &x2).unwrap();
        let e = (-2.0 * t).exp();
        let expect = SparsePolynomial::from_terms(1, [(vec![2], e), (vec![0], (1.0 - e) / 2.0)]).unwrap();
        assert!((out - expect).max_abs_coeff() < 1e-15);
    }
}
