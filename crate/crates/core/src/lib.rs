//! Spectral analysis of Ornstein–Uhlenbeck operators
//! `L f = ½ tr(Q ∇²f) + ⟨Bx, ∇f⟩` on polynomial spaces.
//!
//! The crate computes the invariant Gaussian measure, the generator's matrix
//! on graded polynomial bases, generalized eigenspaces up to a degree cap and
//! their pairwise orthogonality in `L²(γ∞)`. Computations that admit it run in
//! exact rational arithmetic.

pub mod error;
pub mod gaussian;
pub mod matrix;
pub mod model;
pub mod operator;
pub mod polynomial;
pub mod reference;
pub mod report;
pub mod scalar;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{Backend, CovarianceMatrix, OUModel};
pub use polynomial::{MultiIndex, SparsePolynomial};
pub use scalar::{Rational, Scalar, C64};
