use thiserror::Error;

use crate::verify::VerificationReport;

/// Failure while evaluating an expression at a point.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("subexpression magnitude {0:e} exceeds guard")]
    Guard(f64),
}

/// Failure while parsing a formula.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{name}` at position {pos}")]
    UnknownSymbol { name: String, pos: usize },
}

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("sampling exhausted {retries} retries at sample {index}: domain too restrictive")]
    RetriesExhausted { index: usize, retries: usize },
    #[error("precondition failed: {what}")]
    Precondition {
        what: String,
        report: Option<Box<VerificationReport>>,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular denominator {value:e} at pivot {pivot}")]
    SingularDenominator { pivot: f64, value: f64 },
    #[error("quadrature did not converge after {panels} panels (last change {change:e})")]
    QuadratureNonConvergence { panels: usize, change: f64 },
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("document error: {0}")]
    Document(String),
}

impl Error {
    pub(crate) fn precondition(what: impl Into<String>, report: VerificationReport) -> Self {
        Error::Precondition {
            what: what.into(),
            report: Some(Box::new(report)),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
