use thiserror::Error;

/// Errors raised by the library. Every variant carries enough context to
/// name the offending operand.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("{0}: invalid truncation dimensions (m and d must be at least 1)")]
    InvalidDims(&'static str),

    #[error("{0}: non-finite entry")]
    NonFiniteInput(&'static str),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e}, allowed {allowed:e})")]
    NotSymmetric { asymmetry: f64, allowed: f64 },

    #[error("matrix is not positive definite (Cholesky failed)")]
    NotPositiveDefinite,

    #[error("{0}: leading block is singular or not positive definite")]
    SingularBlock(&'static str),

    #[error("{0}: empty input")]
    EmptyInput(&'static str),

    #[error("{0}: input vectors span only the zero subspace")]
    DegenerateSpan(&'static str),

    #[error("{op}: size limit exceeded ({detail})")]
    SizeLimit { op: &'static str, detail: String },

    #[error("degree mismatch ({left} vs {right})")]
    DegreeMismatch { left: usize, right: usize },

    #[error("{op}: vectors are not A-orthonormal (entry ({i},{j}) deviates by {deviation:e})")]
    NotOrthonormal {
        op: &'static str,
        i: usize,
        j: usize,
        deviation: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("CFL condition violated: dt = {dt:e} exceeds limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("non-finite value at t = {t}, cell {cell}, moment {moment}")]
    NonFinite { t: f64, cell: usize, moment: usize },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(op: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            op,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
