//! The two reference models with closed-form data: a rotating drift with
//! eigenvalues `-1 ± i`, and the lower-triangular family
//! `B = [[-a+d, 0], [c, -a-d]]` with `a > d > 0`, `c ≠ 0`, both with `Q = I`.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{CoordinateChange, OUModel};
use crate::polynomial::SparsePolynomial;
use crate::scalar::{format_rational, parse_rational, rational_to_f64, Rational, Scalar};

/// `Q = I₂`, `B = [[-1, 1], [-1, -1]]`.
pub fn rotating_model() -> OUModel {
    OUModel::from_ratios(
        &[&[(1, 1), (0, 1)], &[(0, 1), (1, 1)]],
        &[&[(-1, 1), (1, 1)], &[(-1, 1), (-1, 1)]],
    )
    .expect("rotating model is valid")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangularParams {
    pub a: Rational,
    pub d: Rational,
    pub c: Rational,
}

impl TriangularParams {
    pub fn new(a: Rational, d: Rational, c: Rational) -> Result<Self> {
        if !d.is_positive() {
            return Err(Error::InvalidParams(format!(
                "constraint d > 0 violated: d = {}",
                format_rational(&d)
            )));
        }
        if a <= d {
            return Err(Error::InvalidParams(format!(
                "constraint a > d violated: a = {}, d = {}",
                format_rational(&a),
                format_rational(&d)
            )));
        }
        if c.is_zero() {
            return Err(Error::InvalidParams("constraint c != 0 violated: c = 0".into()));
        }
        Ok(TriangularParams { a, d, c })
    }

    pub fn from_ints(a: i64, d: i64, c: i64) -> Result<Self> {
        Self::new(Rational::from_i64(a), Rational::from_i64(d), Rational::from_i64(c))
    }

    /// Parses `"p/q"` or decimal text for each parameter.
    pub fn parse(a: &str, d: &str, c: &str) -> Result<Self> {
        Self::new(parse_rational(a)?, parse_rational(d)?, parse_rational(c)?)
    }

    /// `d = a/2`, where a quartic eigenfunction shares the eigenvalue `-2a`.
    pub fn is_resonant(&self) -> bool {
        &self.d * Rational::from_i64(2) == self.a
    }
}

fn q(n: i64) -> Rational {
    Rational::from_i64(n)
}

/// `Q = I₂`, `B = [[-a+d, 0], [c, -a-d]]`.
pub fn triangular_model(p: &TriangularParams) -> Result<OUModel> {
    let (a, d, c) = (&p.a, &p.d, &p.c);
    let b = Matrix::from_rows(vec![
        vec![-a + d, Rational::zero()],
        vec![c.clone(), -a - d],
    ])?;
    OUModel::from_exact(Matrix::identity(2), b)
}

/// Closed-form stationary covariance of the triangular model.
pub fn triangular_stationary_covariance(p: &TriangularParams) -> Matrix<Rational> {
    let (a, d, c) = (&p.a, &p.d, &p.c);
    let q11 = Rational::one() / (q(2) * (a - d));
    let q12 = c / (q(4) * a * (a - d));
    let q22 = c * c / (q(4) * a * (a - d) * (a + d)) + Rational::one() / (q(2) * (a + d));
    Matrix::from_rows(vec![vec![q11, q12.clone()], vec![q12, q22]]).expect("2x2")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenfunction {
    pub name: &'static str,
    pub polynomial: SparsePolynomial<Rational>,
    pub eigenvalue: Rational,
}

fn poly(terms: Vec<(Vec<u32>, Rational)>) -> SparsePolynomial<Rational> {
    SparsePolynomial::from_terms(2, terms).expect("two variables")
}

/// `v₁, v₂, v₃` at `-2(a-d), -2a, -2(a+d)`, plus the quartic `v₄` at `-2a`
/// when `d = a/2`.
pub fn triangular_eigenfunctions(p: &TriangularParams) -> Vec<Eigenfunction> {
    let (a, d, c) = (&p.a, &p.d, &p.c);
    let one = Rational::one();
    let mut out = vec![
        Eigenfunction {
            name: "v1",
            polynomial: poly(vec![
                (vec![2, 0], one.clone()),
                (vec![0, 0], -(&one / (q(2) * (a - d)))),
            ]),
            eigenvalue: q(-2) * (a - d),
        },
        Eigenfunction {
            name: "v2",
            polynomial: poly(vec![
                (vec![2, 0], one.clone()),
                (vec![1, 1], -(q(2) * d / c)),
                (vec![0, 0], -(&one / (q(2) * a))),
            ]),
            eigenvalue: q(-2) * a,
        },
        Eigenfunction {
            name: "v3",
            polynomial: poly(vec![
                (vec![2, 0], one.clone()),
                (vec![1, 1], -(q(4) * d / c)),
                (vec![0, 2], q(4) * d * d / (c * c)),
                (vec![0, 0], -((c * c + q(4) * d * d) / (q(2) * c * c * (a + d)))),
            ]),
            eigenvalue: q(-2) * (a + d),
        },
    ];
    if p.is_resonant() {
        out.push(Eigenfunction {
            name: "v4",
            polynomial: poly(vec![
                (vec![4, 0], one.clone()),
                (vec![2, 0], -(q(6) / a)),
                (vec![0, 0], q(3) / (a * a)),
            ]),
            eigenvalue: q(-2) * a,
        });
    }
    out
}

/// `z₁ = √(a-d)·x₁`, `z₂ = √((a+d)/(c²+4a²))·(2a·x₂ - c·x₁)`, under which the
/// stationary law becomes `N(0, ½I)`.
pub fn triangular_whitening(p: &TriangularParams) -> Result<CoordinateChange> {
    let (a, d, c) = (rational_to_f64(&p.a), rational_to_f64(&p.d), rational_to_f64(&p.c));
    let s = ((a + d) / (c * c + 4.0 * a * a)).sqrt();
    let h = Matrix::from_rows(vec![vec![(a - d).sqrt(), 0.0], vec![-c * s, 2.0 * a * s]])?;
    CoordinateChange::general(h)
}

/// Parameter triples used by tests and the acceptance suite.
pub fn parameter_sweep() -> Vec<TriangularParams> {
    let r = |n: i64, m: i64| Rational::from_ratio(n, m);
    [
        (r(2, 1), r(1, 1), r(1, 1)),
        (r(3, 1), r(1, 1), r(2, 1)),
        (r(5, 1), r(2, 1), r(3, 1)),
        (r(4, 1), r(2, 1), r(-1, 1)),
        (r(7, 2), r(1, 3), r(5, 4)),
        (r(1, 1), r(1, 2), r(1, 1)),
        (r(9, 1), r(8, 1), r(-7, 1)),
        (r(3, 2), r(1, 5), r(-2, 3)),
        (r(10, 1), r(3, 1), r(100, 1)),
        (r(6, 1), r(3, 1), r(1, 10)),
        (r(11, 7), r(3, 7), r(13, 5)),
        (r(1, 3), r(1, 4), r(-1, 1)),
    ]
    .into_iter()
    .map(|(a, d, c)| TriangularParams::new(a, d, c).expect("sweep triple is valid"))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::inner_product;
    use crate::model::{drift_eigenvalues, solve_lyapunov};
    use crate::operator::apply_generator;
    use crate::polynomial::MultiIndex;
    use crate::scalar::C64;

    fn r(n: i64, m: i64) -> Rational {
        Rational::from_ratio(n, m)
    }

    #[test]
    fn rotating_model_data() {
        let m = rotating_model();
        let eigs = drift_eigenvalues(m.b()).unwrap();
        assert_eq!(eigs, vec![C64::new(-1.0, 1.0), C64::new(-1.0, -1.0)]);
        let q_inf = solve_lyapunov(&m).unwrap().exact.unwrap();
        assert_eq!(q_inf, Matrix::diagonal(&[r(1, 2), r(1, 2)]));
    }

    #[test]
    fn triangular_substitution() {
        let p = TriangularParams::from_ints(2, 1, 1).unwrap();
        let m = triangular_model(&p).unwrap();
        assert_eq!(m.b().to_rows(), vec![vec![-1.0, 0.0], vec![1.0, -3.0]]);
        let eigs = drift_eigenvalues(m.b()).unwrap();
        assert_eq!(eigs, vec![C64::new(-1.0, 0.0), C64::new(-3.0, 0.0)]);
    }

    #[test]
    fn invalid_params_name_constraint() {
        let e = TriangularParams::from_ints(1, 2, 1).unwrap_err();
        assert!(e.to_string().contains("a > d"), "{e}");
        let e = TriangularParams::from_ints(2, 0, 1).unwrap_err();
        assert!(e.to_string().contains("d > 0"), "{e}");
        let e = TriangularParams::from_ints(2, 1, 0).unwrap_err();
        assert!(e.to_string().contains("c != 0"), "{e}");
    }

    #[test]
    fn closed_form_covariance_matches_solver() {
        for p in parameter_sweep() {
            let solved = solve_lyapunov(&triangular_model(&p).unwrap()).unwrap().exact.unwrap();
            assert_eq!(solved, triangular_stationary_covariance(&p), "{p:?}");
        }
        let p = TriangularParams::from_ints(2, 1, 1).unwrap();
        assert_eq!(
            triangular_stationary_covariance(&p).to_rows(),
            vec![vec![r(1, 2), r(1, 8)], vec![r(1, 8), r(5, 24)]]
        );
    }

    #[test]
    fn eigenfunctions_have_zero_residual() {
        for p in parameter_sweep() {
            let m = triangular_model(&p).unwrap();
            for v in triangular_eigenfunctions(&p) {
                let lv = apply_generator(&m, &v.polynomial).unwrap();
                assert!((lv - v.polynomial.scale(&v.eigenvalue)).is_zero(), "{} at {p:?}", v.name);
            }
        }
    }

    #[test]
    fn v3_constant_at_two_one_one() {
        let p = TriangularParams::from_ints(2, 1, 1).unwrap();
        let v3 = &triangular_eigenfunctions(&p)[2];
        assert_eq!(v3.polynomial.coefficient(&MultiIndex::zero(2)), r(-5, 6));
    }

    #[test]
    fn quartic_only_when_resonant() {
        let p = TriangularParams::from_ints(4, 2, 3).unwrap();
        let vs = triangular_eigenfunctions(&p);
        assert_eq!(vs.len(), 4);
        assert_eq!(vs[3].eigenvalue, r(-8, 1));
        assert_eq!(vs[3].eigenvalue, vs[1].eigenvalue);
        assert_eq!(triangular_eigenfunctions(&TriangularParams::from_ints(3, 1, 1).unwrap()).len(), 3);
    }

    #[test]
    fn headline_pairing_and_nonorthogonality() {
        for p in parameter_sweep() {
            let sigma = triangular_stationary_covariance(&p);
            let vs = triangular_eigenfunctions(&p);
            let v13 = inner_product(&vs[0].polynomial, &vs[2].polynomial, &sigma).unwrap();
            assert_eq!(v13, Rational::one() / (q(2) * &p.a * &p.a));
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                let g = inner_product(&vs[i].polynomial, &vs[j].polynomial, &sigma).unwrap();
                assert!(!g.is_zero());
            }
            let one = SparsePolynomial::one(2);
            for v in &vs {
                assert!(inner_product(&one, &v.polynomial, &sigma).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn whitening_standardizes() {
        for p in parameter_sweep() {
            let w = triangular_whitening(&p).unwrap();
            assert!(w.determinant().abs() > 0.0);
            let t = w.transform_covariance(&triangular_stationary_covariance(&p).to_f64());
            let err = t.sub(&Matrix::diagonal(&[0.5, 0.5])).max_abs();
            assert!(err < 1e-12, "{p:?}: {err}");
        }
        let w = triangular_whitening(&TriangularParams::from_ints(2, 1, 1).unwrap()).unwrap();
        let s = (3.0f64 / 17.0).sqrt();
        assert!((w.h[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((w.h[(1, 1)] - 4.0 * s).abs() < 1e-15);
        assert!((w.h[(1, 0)] + s).abs() < 1e-15);
    }
}
