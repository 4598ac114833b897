use thiserror::Error;

/// Errors raised by the geometric and matching routines.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("index out of range: {what} index {index} (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("empty matching")]
    EmptyMatching,

    #[error("duplicate {what} index {index} in matching")]
    DuplicateIndex { what: &'static str, index: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("infeasible size: k = {k} but min(m, n) = {max}")]
    InfeasibleSize { k: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("instance too large for oracle: {count} candidate matchings (limit {limit})")]
    OracleTooLarge { count: u128, limit: u128 },

    #[error("diagram was built for instance {expected}, queried with {found}")]
    InstanceMismatch { expected: String, found: String },

    #[error("malformed diagram document: {0}")]
    MalformedDiagram(String),

    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: ParseErrorKind },
}

/// What went wrong while reading an instance file.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    #[error("malformed header, expected `m n k p`")]
    MalformedHeader,

    #[error("expected {expected} points, found {found}")]
    CountMismatch { expected: usize, found: usize },

    #[error("non-numeric token `{0}`")]
    NonNumeric(String),

    #[error("k = {k} outside 1..={max}")]
    KOutOfRange { k: usize, max: usize },

    #[error("bad cost exponent `{0}`")]
    BadExponent(String),

    #[error("expected two coordinates, found {0} tokens")]
    BadPointLine(usize),

    #[error("non-finite coordinate")]
    NonFinite,

    #[error("invalid JSON instance: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;
