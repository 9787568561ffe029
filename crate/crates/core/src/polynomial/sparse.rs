use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::MultiIndex;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{rational_to_f64, JsonNumber, Rational, Scalar, C64};

/// Multivariate polynomial in `dim` variables stored as a sparse map from
/// exponent vectors to nonzero coefficients.
#[derive(Clone, PartialEq)]
pub struct SparsePolynomial<S> {
    dim: usize,
    terms: BTreeMap<MultiIndex, S>,
}

impl<S: Scalar> SparsePolynomial<S> {
    pub fn zero(dim: usize) -> Self {
        SparsePolynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: S) -> Self {
        Self::monomial(MultiIndex::zero(dim), c)
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, S::one())
    }

    pub fn monomial(alpha: MultiIndex, c: S) -> Self {
        let mut p = Self::zero(alpha.dim());
        p.add_term(alpha, c);
        p
    }

    /// The coordinate function `x_i` (0-based).
    pub fn variable(dim: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::unit(dim, i), S::one())
    }

    /// Builds from `(exponents, coefficient)` pairs; repeated exponents are summed.
    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Vec<u32>, S)>) -> Result<Self> {
        let mut p = Self::zero(dim);
        for (exps, c) in terms {
            if exps.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: exps.len(),
                });
            }
            p.add_term(MultiIndex::new(exps), c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(MultiIndex::degree).max()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&MultiIndex, &S)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> S {
        self.terms.get(alpha).cloned().unwrap_or_else(S::zero)
    }

    /// Adds `c·x^α` in place, dropping the term if it cancels.
    pub fn add_term(&mut self, alpha: MultiIndex, c: S) {
        assert_eq!(alpha.dim(), self.dim, "exponent dimension mismatch");
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&alpha) {
            Some(old) => {
                let sum = old + c;
                if !sum.is_zero() {
                    self.terms.insert(alpha, sum);
                }
            }
            None => {
                self.terms.insert(alpha, c);
            }
        }
    }

    pub fn scale(&self, k: &S) -> Self {
        if k.is_zero() {
            return Self::zero(self.dim);
        }
        let mut out = Self::zero(self.dim);
        for (a, c) in &self.terms {
            out.add_term(a.clone(), c.clone() * k.clone());
        }
        out
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> SparsePolynomial<T> {
        let mut out = SparsePolynomial::zero(self.dim);
        for (a, c) in &self.terms {
            out.add_term(a.clone(), f(c));
        }
        out
    }

    /// Part of total degree exactly `d`.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        SparsePolynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(a, _)| a.degree() == d)
                .map(|(a, c)| (a.clone(), c.clone()))
                .collect(),
        }
    }

    /// `∂p/∂x_i` (0-based).
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (a, c) in &self.terms {
            if let Some(lowered) = a.lower(i) {
                out.add_term(lowered, c.clone() * S::from_i64(a.get(i) as i64));
            }
        }
        out
    }

    /// Multiplies by the monomial `x^β`.
    pub fn shift(&self, beta: &MultiIndex) -> Self {
        SparsePolynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(a, c)| (a.add(beta), c.clone()))
                .collect(),
        }
    }

    pub fn evaluate(&self, x: &[S]) -> S {
        assert_eq!(x.len(), self.dim);
        self.terms.iter().fold(S::zero(), |acc, (a, c)| {
            let mono = a
                .exps()
                .iter()
                .zip(x)
                .fold(S::one(), |m, (&e, xi)| m * pow(xi, e));
            acc + c.clone() * mono
        })
    }

    /// The polynomial `x ↦ p(A·x)` for a square `A`.
    pub fn substitute_linear(&self, a: &Matrix<S>) -> Result<Self> {
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: a.nrows(),
            });
        }
        let forms: Vec<Self> = (0..self.dim)
            .map(|i| {
                let mut f = Self::zero(self.dim);
                for j in 0..self.dim {
                    f.add_term(MultiIndex::unit(self.dim, j), a[(i, j)].clone());
                }
                f
            })
            .collect();
        let max_deg = self.degree().unwrap_or(0) as usize;
        // powers[i][e] = (row i of A · x)^e
        let powers: Vec<Vec<Self>> = forms
            .iter()
            .map(|f| {
                let mut v = vec![Self::one(self.dim)];
                for e in 1..=max_deg {
                    let next = &v[e - 1] * f;
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Self::zero(self.dim);
        for (alpha, c) in &self.terms {
            let mut term = Self::constant(self.dim, c.clone());
            for (i, &e) in alpha.exps().iter().enumerate() {
                if e > 0 {
                    term = &term * &powers[i][e as usize];
                }
            }
            out = out + term;
        }
        Ok(out)
    }

    /// Largest coefficient magnitude.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(Scalar::magnitude).fold(0.0, f64::max)
    }

    /// Drops coefficients with magnitude at most `tol`.
    pub fn prune(&self, tol: f64) -> Self {
        SparsePolynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.magnitude() > tol)
                .map(|(a, c)| (a.clone(), c.clone()))
                .collect(),
        }
    }

    /// Coordinates of `self` against an ordered list of monomials; `None` if a
    /// term falls outside the list.
    pub fn coordinates(&self, basis: &[MultiIndex]) -> Option<Vec<S>> {
        let mut out = vec![S::zero(); basis.len()];
        let mut matched = 0;
        for (i, m) in basis.iter().enumerate() {
            if let Some(c) = self.terms.get(m) {
                out[i] = c.clone();
                matched += 1;
            }
        }
        (matched == self.terms.len()).then_some(out)
    }

    pub fn from_coordinates(dim: usize, basis: &[MultiIndex], coords: &[S]) -> Self {
        let mut p = Self::zero(dim);
        for (m, c) in basis.iter().zip(coords) {
            p.add_term(m.clone(), c.clone());
        }
        p
    }

    pub fn to_json(&self) -> PolynomialJson {
        PolynomialJson {
            dim: Some(self.dim),
            terms: self
                .terms
                .iter()
                .rev()
                .map(|(a, c)| {
                    let (re, im) = c.to_json_parts();
                    TermJson {
                        alpha: a.exps().to_vec(),
                        re,
                        im,
                    }
                })
                .collect(),
        }
    }

    pub fn from_json(json: &PolynomialJson) -> Result<Self> {
        let dim = json
            .dim
            .or_else(|| json.terms.first().map(|t| t.alpha.len()))
            .ok_or_else(|| Error::schema("polynomial", "empty term list needs \"dim\""))?;
        let mut p = Self::zero(dim);
        for (k, t) in json.terms.iter().enumerate() {
            if t.alpha.len() != dim {
                return Err(Error::schema(
                    format!("terms[{k}].alpha"),
                    format!("expected {dim} exponents, found {}", t.alpha.len()),
                ));
            }
            let c = S::from_json_parts(&t.re, &t.im).map_err(|e| {
                Error::schema(format!("terms[{k}]"), e.to_string())
            })?;
            p.add_term(MultiIndex::new(t.alpha.clone()), c);
        }
        Ok(p)
    }
}

impl SparsePolynomial<Rational> {
    pub fn to_f64(&self) -> SparsePolynomial<f64> {
        self.map_coeffs(rational_to_f64)
    }
}

impl SparsePolynomial<f64> {
    pub fn to_c64(&self) -> SparsePolynomial<C64> {
        self.map_coeffs(|c| C64::new(*c, 0.0))
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.evaluate(x)
    }
}

impl SparsePolynomial<C64> {
    /// Real part, with the largest discarded imaginary magnitude.
    pub fn real_part(&self) -> (SparsePolynomial<f64>, f64) {
        let im = self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max);
        (self.map_coeffs(|c| c.re), im)
    }
}

fn pow<S: Scalar>(x: &S, e: u32) -> S {
    (0..e).fold(S::one(), |acc, _| acc * x.clone())
}

impl<S: Scalar> Add for SparsePolynomial<S> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension mismatch");
        for (a, c) in rhs.terms {
            self.add_term(a, c);
        }
        self
    }
}

impl<S: Scalar> Add for &SparsePolynomial<S> {
    type Output = SparsePolynomial<S>;
    fn add(self, rhs: Self) -> SparsePolynomial<S> {
        self.clone() + rhs.clone()
    }
}

impl<S: Scalar> Neg for SparsePolynomial<S> {
    type Output = Self;
    fn neg(self) -> Self {
        SparsePolynomial {
            dim: self.dim,
            terms: self.terms.into_iter().map(|(a, c)| (a, -c)).collect(),
        }
    }
}

impl<S: Scalar> Sub for SparsePolynomial<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<S: Scalar> Sub for &SparsePolynomial<S> {
    type Output = SparsePolynomial<S>;
    fn sub(self, rhs: Self) -> SparsePolynomial<S> {
        self.clone() - rhs.clone()
    }
}

impl<S: Scalar> Mul for &SparsePolynomial<S> {
    type Output = SparsePolynomial<S>;
    fn mul(self, rhs: Self) -> SparsePolynomial<S> {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension mismatch");
        let mut out = SparsePolynomial::zero(self.dim);
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                out.add_term(a.add(b), ca.clone() * cb.clone());
            }
        }
        out
    }
}

impl<S: Scalar> Mul for SparsePolynomial<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

/// Renders as e.g. `4*x1^2 - 2`, highest-degree terms first.
impl<S: Scalar> fmt::Display for SparsePolynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (alpha, c)) in self.terms.iter().rev().enumerate() {
            let (negative, mag) = c.signed_text();
            match (k, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let vars: Vec<String> = alpha
                .exps()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    if e == 1 {
                        format!("x{}", i + 1)
                    } else {
                        format!("x{}^{}", i + 1, e)
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == "1" {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", mag, vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl<S: Scalar> fmt::Debug for SparsePolynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparsePolynomial[{}]({})", self.dim, self)
    }
}

/// Canonical JSON form: `{"dim": N, "terms": [{"alpha": [..], "re": .., "im": ..}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub alpha: Vec<u32>,
    pub re: JsonNumber,
    #[serde(default)]
    pub im: JsonNumber,
}

#[cfg(test)]
mod tests {
    use super::*;

    type RPoly = SparsePolynomial<Rational>;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn x(i: usize) -> RPoly {
        RPoly::variable(2, i)
    }

    #[test]
    fn renders_hermite_two() {
        let p = RPoly::from_terms(2, [(vec![2, 0], r(4, 1)), (vec![0, 0], r(-2, 1))]).unwrap();
        assert_eq!(p.to_string(), "4*x1^2 - 2");
        let q = -(x(0) * x(1)) + RPoly::constant(2, r(1, 8));
        assert_eq!(q.to_string(), "-x1*x2 + 1/8");
        assert_eq!(RPoly::zero(2).to_string(), "0");
    }

    #[test]
    fn cancellation_removes_terms() {
        let p = x(0) + x(1);
        let q = &p - &x(1);
        assert_eq!(q, x(0));
        assert!((&p - &p).is_zero());
        assert_eq!((&p - &p).degree(), None);
    }

    #[test]
    fn derivative_and_degree() {
        let p = &(&x(0) * &x(0)) * &x(1);
        assert_eq!(p.degree(), Some(3));
        assert_eq!(p.derivative(0), RPoly::constant(2, r(2, 1)) * (x(0) * x(1)));
        assert!(RPoly::one(2).derivative(1).is_zero());
    }

    #[test]
    fn linear_substitution() {
        // p = x1^2, A = [[1, 2], [0, 1]] -> (x1 + 2 x2)^2
        let p = &x(0) * &x(0);
        let a = Matrix::from_rows(vec![vec![r(1, 1), r(2, 1)], vec![r(0, 1), r(1, 1)]]).unwrap();
        let s = p.substitute_linear(&a).unwrap();
        let lin = x(0) + x(1).scale(&r(2, 1));
        assert_eq!(s, &lin * &lin);
    }

    #[test]
    fn json_round_trip_keeps_exact_values() {
        let p = RPoly::from_terms(2, [(vec![1, 1], r(-4, 3)), (vec![0, 0], r(5, 6))]).unwrap();
        let text = serde_json::to_string(&p.to_json()).unwrap();
        assert!(text.contains("\"-4/3\""));
        let back: PolynomialJson = serde_json::from_str(&text).unwrap();
        assert_eq!(RPoly::from_json(&back).unwrap(), p);
    }

    #[test]
    fn json_rejects_wrong_arity() {
        let j: PolynomialJson =
            serde_json::from_str(r#"{"dim": 2, "terms": [{"alpha": [1], "re": 1}]}"#).unwrap();
        assert!(matches!(RPoly::from_json(&j), Err(Error::Schema { .. })));
    }

    #[test]
    fn complex_rendering() {
        let p = SparsePolynomial::<C64>::monomial(MultiIndex::new(vec![1, 0]), C64::new(1.0, -2.0));
        assert_eq!(p.to_string(), "(1-2i)*x1");
    }
}
