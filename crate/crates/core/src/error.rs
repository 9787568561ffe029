use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} must be square, got {rows}x{cols}")]
    NotSquare {
        what: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("{what} is empty")]
    Empty { what: &'static str },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Q is not symmetric: Q[{row}][{col}] = {upper} but Q[{col}][{row}] = {lower}")]
    NotSymmetric {
        row: usize,
        col: usize,
        upper: String,
        lower: String,
    },
    #[error("Q is not positive definite: leading principal minor of order {order} is {value}")]
    NotPositiveDefinite { order: usize, value: String },
    #[error("B is not Hurwitz: eigenvalue {eigenvalue} has real part >= -{tolerance:e}")]
    NotHurwitz { eigenvalue: String, tolerance: f64 },
    #[error("linear system is singular ({context})")]
    SingularSystem { context: &'static str },
    #[error("exact rational arithmetic unavailable: {0}")]
    ExactUnavailable(String),
    #[error("basis unavailable: {0}")]
    BasisUnavailable(String),
    #[error("model is not in normal form (Q = I, Q_inf diagonal): residual {residual:e}")]
    NotNormalized { residual: f64 },
    #[error("unsupported dimension {found}, this construction needs N = {expected}")]
    UnsupportedDimension { expected: usize, found: usize },
    #[error("eigen-solver did not converge on {0}")]
    ConvergenceFailure(String),
    #[error(
        "rank decision ambiguous for eigenvalue {eigenvalue}: singular value {value:e} \
         falls inside the band [{low:e}, {high:e}]"
    )]
    RankDecisionAmbiguous {
        eigenvalue: String,
        value: f64,
        low: f64,
        high: f64,
    },
    #[error(
        "generalized eigenspace for {eigenvalue} has dimension {found}, \
         but its algebraic multiplicity is {expected}"
    )]
    KernelDimensionMismatch {
        eigenvalue: String,
        expected: usize,
        found: usize,
    },
    #[error("drift matrix has complex eigenvalues {0}")]
    ComplexSpectrum(String),
    #[error("drift matrix has a repeated eigenvalue {0}")]
    RepeatedEigenvalue(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("Cholesky factorization failed for {0}")]
    CholeskyFailure(String),
    #[error("normalization constant sqrt({0}) is irrational")]
    IrrationalNormalization(String),
    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures caused by a numerical rank/cluster decision rather than bad input.
    pub fn is_numerical_ambiguity(&self) -> bool {
        matches!(
            self,
            Error::RankDecisionAmbiguous { .. }
                | Error::KernelDimensionMismatch { .. }
                | Error::ConvergenceFailure(_)
        )
    }

    pub(crate) fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
