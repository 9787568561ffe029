//! Tensor products of dilated Hermite polynomials.
//!
//! The physicists' convention is used throughout: `H_k` is orthogonal for the
//! weight `e^{-x²}`, i.e. for the centered Gaussian of variance `1/2`, with
//! `‖H_k‖² = 2^k k!`. A dilation `s` produces `H_k(x/s)`, orthogonal for the
//! Gaussian of variance `s²/2`.

use super::{MultiIndex, SparsePolynomial};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Coefficients of the physicists' Hermite polynomial `H_k`, lowest power first.
pub fn hermite_coefficients<S: Scalar>(k: u32) -> Vec<S> {
    let mut prev = vec![S::one()];
    if k == 0 {
        return prev;
    }
    let mut cur = vec![S::zero(), S::from_i64(2)];
    for n in 1..k {
        // H_{n+1} = 2x H_n - 2n H_{n-1}
        let mut next = vec![S::zero(); n as usize + 2];
        for (j, c) in cur.iter().enumerate() {
            next[j + 1] = next[j + 1].clone() + S::from_i64(2) * c.clone();
        }
        for (j, c) in prev.iter().enumerate() {
            next[j] = next[j].clone() - S::from_i64(2 * n as i64) * c.clone();
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// `2^{|k|} · k!`, the squared norm of `H_k` under its orthogonality measure.
pub fn hermite_norm_squared<S: Scalar>(k: &MultiIndex) -> S {
    k.exps().iter().fold(S::one(), |acc, &ki| {
        (1..=ki as i64).fold(acc, |a, j| a * S::from_i64(2 * j))
    })
}

/// `Π_i H_{k_i}(x_i / s_i)`, optionally divided by `√(2^{|k|} k!)`.
///
/// Normalization needs the square root to exist in the backend; for rationals
/// that means `2^{|k|} k!` must be a perfect square.
pub fn hermite_tensor<S: Scalar>(
    k: &MultiIndex,
    dilations: &[S],
    normalized: bool,
) -> Result<SparsePolynomial<S>> {
    let dim = k.dim();
    if dilations.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: dilations.len(),
        });
    }
    if let Some(bad) = dilations.iter().find(|s| {
        let z = s.to_c64();
        !(z.re > 0.0 && z.im == 0.0)
    }) {
        return Err(Error::InvalidParams(format!(
            "dilation {bad:?} is not strictly positive"
        )));
    }
    let mut out = SparsePolynomial::one(dim);
    for (i, &ki) in k.exps().iter().enumerate() {
        let coeffs = hermite_coefficients::<S>(ki);
        let inv = S::one() / dilations[i].clone();
        let mut factor = SparsePolynomial::zero(dim);
        let mut scale = S::one();
        for (j, c) in coeffs.into_iter().enumerate() {
            let mut e = vec![0; dim];
            e[i] = j as u32;
            factor.add_term(MultiIndex::new(e), c * scale.clone());
            scale = scale * inv.clone();
        }
        out = &out * &factor;
    }
    if normalized {
        let n2 = hermite_norm_squared::<S>(k);
        let root = n2
            .try_sqrt()
            .ok_or_else(|| Error::IrrationalNormalization(format!("{n2:?}")))?;
        out = out.scale(&(S::one() / root));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    #[test]
    fn classical_low_orders() {
        assert_eq!(hermite_coefficients::<Rational>(0), vec![r(1)]);
        assert_eq!(hermite_coefficients::<Rational>(2), vec![r(-2), r(0), r(4)]);
        assert_eq!(
            hermite_coefficients::<Rational>(4),
            vec![r(12), r(0), r(-48), r(0), r(16)]
        );
    }

    #[test]
    fn tensor_examples() {
        let one = vec![r(1), r(1)];
        let h00 = hermite_tensor(&MultiIndex::new(vec![0, 0]), &one, false).unwrap();
        assert_eq!(h00.to_string(), "1");
        let h20 = hermite_tensor(&MultiIndex::new(vec![2, 0]), &one, false).unwrap();
        assert_eq!(h20.to_string(), "4*x1^2 - 2");
        let h11 = hermite_tensor(&MultiIndex::new(vec![1, 1]), &one, true).unwrap();
        assert_eq!(h11.to_string(), "2*x1*x2");
    }

    #[test]
    fn irrational_normalization_is_reported() {
        let one = vec![r(1), r(1)];
        assert!(matches!(
            hermite_tensor(&MultiIndex::new(vec![1, 0]), &one, true),
            Err(Error::IrrationalNormalization(_))
        ));
        let f = hermite_tensor(&MultiIndex::new(vec![1, 0]), &[1.0, 1.0], true).unwrap();
        assert!((f.coefficient(&MultiIndex::new(vec![1, 0])) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dilation_rescales_argument() {
        let h = hermite_tensor(&MultiIndex::new(vec![2]), &[r(2)], false).unwrap();
        // H_2(x/2) = x^2 - 2
        assert_eq!(h.to_string(), "x1^2 - 2");
        assert!(hermite_tensor(&MultiIndex::new(vec![1]), &[r(0)], false).is_err());
    }
}
