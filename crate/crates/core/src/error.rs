use thiserror::Error;

/// Errors raised by model construction, evaluation and the numerical solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("model {model} requires parameter `{name}`")]
    MissingParameter {
        model: &'static str,
        name: &'static str,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point outside the domain of {model}: {reason}")]
    OutsideDomain { model: &'static str, reason: String },

    #[error("non-finite coordinate in input point")]
    NonFinite,

    #[error("singular Jacobian (|det| = {det:e})")]
    SingularJacobian { det: f64 },

    #[error(
        "Newton iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("iterate left the search region")]
    LeftSearchRegion,

    #[error("no sign change of the test function on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("eigenvalue solver supports dimensions 1 and 2, got {0}")]
    UnsupportedDimension(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
