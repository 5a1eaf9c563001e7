use thiserror::Error;

/// Errors raised by spline construction, evaluation and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("weight w_{index} is not positive at x = {x} (value {value})")]
    NonPositiveWeight { index: usize, x: f64, value: f64 },

    #[error("{what}: derivative of order {requested} requested, only {available} available")]
    InsufficientSmoothness {
        what: String,
        requested: usize,
        available: usize,
    },

    #[error("nested quadrature did not converge: {detail}")]
    QuadratureNotConverged { detail: String },

    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("point {x} lies outside [{a}, {b}]")]
    OutOfDomain { x: f64, a: f64, b: f64 },

    #[error("invalid knots: {0}")]
    InvalidKnots(String),

    #[error("knot {value} has multiplicity {multiplicity}, exceeding the admissible {max}")]
    MultiplicityViolation {
        value: f64,
        multiplicity: usize,
        max: usize,
    },

    #[error("interlacing condition fails at index {index}: {detail}")]
    Interlacing { index: usize, detail: String },

    #[error("x = {x} is a knot; only one-sided evaluation is defined there")]
    AtKnot { x: f64 },

    #[error("degenerate knot configuration: {0}")]
    DegenerateKnots(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("decay fit unavailable: {0}")]
    FitUnavailable(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
