//! Sparse multivariate polynomials, graded monomial bases and Hermite products.

mod basis;
mod hermite;
mod multi_index;
mod sparse;

pub use basis::{binomial, exponents_of_degree, monomial_basis, BasisOrdering, GradedBasis};
pub use hermite::{hermite_coefficients, hermite_norm_squared, hermite_tensor};
pub use multi_index::MultiIndex;
pub use sparse::{PolynomialJson, SparsePolynomial, TermJson};

/// Weighted index `V(α) = Σ j·α_j` (1-based weights).
pub fn v_order(alpha: &MultiIndex) -> u64 {
    alpha.v_order()
}
