//! Stationary covariance `Q∞` from `B·Q∞ + Q∞·Bᵀ + Q = 0`, and finite-time `Q_t`.

use super::{matrix_exponential, CovarianceMatrix, CovarianceTime, OUModel};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Solves `B·X + X·Bᵀ = −Q` through the vectorized `N²×N²` system.
pub fn solve_lyapunov_system<S: Scalar>(b: &Matrix<S>, q: &Matrix<S>) -> Result<Matrix<S>> {
    let n = b.nrows();
    let idx = |i: usize, j: usize| i * n + j;
    let mut sys = Matrix::<S>::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let row = idx(i, j);
            for k in 0..n {
                // (B X)_{ij} = Σ_k B_ik X_kj
                let v = sys[(row, idx(k, j))].clone() + b[(i, k)].clone();
                sys[(row, idx(k, j))] = v;
                // (X Bᵀ)_{ij} = Σ_k X_ik B_jk
                let v = sys[(row, idx(i, k))].clone() + b[(j, k)].clone();
                sys[(row, idx(i, k))] = v;
            }
        }
    }
    let rhs: Vec<S> = (0..n * n).map(|r| -q[(r / n, r % n)].clone()).collect();
    let x = sys.solve(&rhs).map_err(|_| Error::SingularSystem {
        context: "Lyapunov equation (drift not Hurwitz?)",
    })?;
    let x = Matrix::from_fn(n, n, |i, j| x[idx(i, j)].clone());
    if S::EXACT {
        Ok(x)
    } else {
        let half = S::one() / S::from_i64(2);
        Ok(x.add(&x.transpose()).scale(&half))
    }
}

/// The invariant covariance `Q∞`, exact whenever the model is rational.
pub fn solve_lyapunov(model: &OUModel) -> Result<CovarianceMatrix> {
    match model.exact_matrices() {
        Ok((q, b)) => Ok(CovarianceMatrix::from_exact(
            CovarianceTime::Infinite,
            solve_lyapunov_system(b, q)?,
        )),
        Err(_) => Ok(CovarianceMatrix::from_f64(
            CovarianceTime::Infinite,
            solve_lyapunov_system(model.b(), model.q())?,
        )),
    }
}

/// `‖B·X + X·Bᵀ + Q‖_max`.
pub fn lyapunov_residual<S: Scalar>(b: &Matrix<S>, q: &Matrix<S>, x: &Matrix<S>) -> S {
    let r = b.mul(x).add(&x.mul(&b.transpose())).add(q);
    let mut worst = S::zero();
    let mut worst_mag = -1.0;
    for row in r.to_rows() {
        for v in row {
            if v.magnitude() > worst_mag {
                worst_mag = v.magnitude();
                worst = v;
            }
        }
    }
    if worst_mag < 0.0 {
        S::zero()
    } else if worst.to_c64().re < 0.0 {
        -worst
    } else {
        worst
    }
}

/// `Q_t = Q∞ − e^{tB} Q∞ e^{tBᵀ}` for finite `t > 0`.
pub fn covariance_at(model: &OUModel, t: f64) -> Result<CovarianceMatrix> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParams(format!("time must be positive and finite, got {t}")));
    }
    let q_inf = solve_lyapunov(model)?.sigma;
    let e = matrix_exponential(model.b(), t);
    let decay = e.mul(&q_inf).mul(&e.transpose());
    let qt = q_inf.sub(&decay);
    let qt = qt.add(&qt.transpose()).scale(&0.5);
    Ok(CovarianceMatrix::from_f64(CovarianceTime::Finite(t), qt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn rotating_drift_gives_half_identity() {
        let m = OUModel::from_ratios(
            &[&[(1, 1), (0, 1)], &[(0, 1), (1, 1)]],
            &[&[(-1, 1), (1, 1)], &[(-1, 1), (-1, 1)]],
        )
        .unwrap();
        let c = solve_lyapunov(&m).unwrap();
        let half = Matrix::diagonal(&[r(1, 2), r(1, 2)]);
        assert_eq!(c.exact.unwrap(), half);
    }

    #[test]
    fn triangular_drift_matches_hand_computation() {
        // a = 2, d = 1, c = 1
        let m = OUModel::from_ratios(
            &[&[(1, 1), (0, 1)], &[(0, 1), (1, 1)]],
            &[&[(-1, 1), (0, 1)], &[(1, 1), (-3, 1)]],
        )
        .unwrap();
        let x = solve_lyapunov(&m).unwrap().exact.unwrap();
        let expected =
            Matrix::from_rows(vec![vec![r(1, 2), r(1, 8)], vec![r(1, 8), r(5, 24)]]).unwrap();
        assert_eq!(x, expected);
        let (q, b) = m.exact_matrices().unwrap();
        assert_eq!(lyapunov_residual(b, q, &x), r(0, 1));
    }

    #[test]
    fn scalar_decay_identity_drift() {
        for n in 1..=4 {
            let b = Matrix::<f64>::identity(n).scale(&-1.0);
            let m = OUModel::from_f64(Matrix::identity(n), b).unwrap();
            let x = solve_lyapunov(&m).unwrap().sigma;
            assert!(x.sub(&Matrix::identity(n).scale(&0.5)).max_abs() < 1e-15);
            let t = 0.7;
            let qt = covariance_at(&m, t).unwrap().sigma;
            let expect = (1.0 - (-2.0 * t).exp()) / 2.0;
            assert!(qt.sub(&Matrix::identity(n).scale(&expect)).max_abs() < 1e-15);
        }
    }

    #[test]
    fn nonpositive_time_rejected() {
        let m = OUModel::from_rows(&[&[1.0]], &[&[-1.0]]).unwrap();
        assert!(covariance_at(&m, 0.0).is_err());
        assert!(covariance_at(&m, f64::INFINITY).is_err());
    }
}
