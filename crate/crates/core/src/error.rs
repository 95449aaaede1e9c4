use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix or vector is empty")]
    Empty,

    #[error("not hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("parameter t = {t} outside [0, {t_max}]")]
    OutOfRange { t: f64, t_max: f64 },

    #[error("{what} did not converge (drift {drift:e} > {tol:e})")]
    NonConvergent { what: String, drift: f64, tol: f64 },

    #[error("vector is zero")]
    ZeroVector,

    #[error("filtration has dimension {filtration}, family has dimension {family}")]
    MismatchedFiltration { filtration: usize, family: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature failed: estimated relative error {estimate:e} > {tolerance:e}")]
    QuadratureFailure { estimate: f64, tolerance: f64 },

    #[error("kernel truncation at N = {n_trunc} leaves tail bound {tail:e}")]
    TruncationInsufficient { n_trunc: usize, tail: f64 },

    #[error("exponent {exponent} overflows double precision; rescale the family first")]
    Overflow { exponent: f64 },

    #[error("schema error at {field}: {message}")]
    Schema { field: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }
}
