use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

/// Failure to turn text into an expression.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} (token {token}, byte {offset})")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// 1-based index of the offending token.
    pub token: usize,
    /// Byte offset of the offending token in the input.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: expected {}, found {found}", expected.join(" or "))]
    Syntax { expected: Vec<&'static str>, found: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("invalid character `{0}`")]
    InvalidChar(char),
    #[error("exponent must be a non-negative integer literal, found `{0}`")]
    BadExponent(String),
}

/// Failure while evaluating an expression at a point.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no binding for variable `{0}`")]
    MissingBinding(String),
    #[error("`{0}` is not a variable of this expression's vocabulary")]
    UnknownVariable(String),
    #[error("{func} is undefined at {arg} in `{node}`")]
    Domain { func: &'static str, arg: f64, node: String },
    #[error("division by zero in `{node}`")]
    DivisionByZero { node: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("at grid index {index}: {source}")]
    AtIndex {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid partition: {0}")]
    InvalidPartition(&'static str),
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("index {index} outside {min}..={max}")]
    IndexOutOfRange { index: usize, min: usize, max: usize },
    #[error("grid functions live on different partitions")]
    PartitionMismatch,
    #[error("blend {0} outside [0, 1]")]
    InvalidBlend(f64),
    #[error("quadrature order must be at least 1, got {0}")]
    InvalidQuadOrder(usize),
    #[error("direction does not vanish at the boundary indices")]
    NotInBoundaryClass,
    #[error("expression uses the {found} vocabulary, expected {expected}")]
    WrongVocabulary { expected: &'static str, found: String },
    #[error("couple is not null: mixed partial of the summed two-point Lagrangian is {residual:e}")]
    NotSeparable { residual: f64 },
    #[error("couple is not null: time-only term varies with x by {deviation:e}")]
    GammaDependsOnX { deviation: f64 },
    #[error("invalid sampling configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("non-finite value encountered")]
    NonFinite,
}

impl Error {
    /// Tags the error with the grid index where it occurred.
    pub fn at(self, index: usize) -> Error {
        match self {
            e @ Error::AtIndex { .. } => e,
            e => Error::AtIndex {
                index,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
