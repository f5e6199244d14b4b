use thiserror::Error;

use crate::expr::ExprError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("point {point:?} lies outside the chart")]
    OutOfChart { point: [f64; 4] },
    #[error(
        "metric at {point:?} has {positive} positive and {negative} negative eigenvalues, expected signature (+,+,-,-)"
    )]
    Signature {
        point: [f64; 4],
        positive: usize,
        negative: usize,
    },
    #[error("metric is singular at {point:?}")]
    SingularMetric { point: [f64; 4] },
    #[error("Gram-Schmidt breakdown at {point:?}: no admissible direction for frame slot {slot}")]
    DegenerateFrame { point: [f64; 4], slot: usize },
    #[error("{what} must be positive, got {value} at {point:?}")]
    NonPositive {
        what: &'static str,
        value: f64,
        point: [f64; 4],
    },
    #[error("bivectors live over different base points")]
    MismatchedBase,
    #[error("disk point |z| = {modulus} is outside the guarded unit disk")]
    OutsideDisk { modulus: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty chart: {0}")]
    EmptyChart(String),
    #[error("out of scope: {0}")]
    OutOfScope(String),
    #[error("spec file line {line}, column {column}: {message}")]
    SpecFile {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
