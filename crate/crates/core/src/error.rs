use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid IFS: {0}")]
    InvalidIfs(String),

    #[error("symbol {symbol} out of range for alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },

    #[error("budget exceeded: {what} needs {requested}, budget is {budget}")]
    Budget {
        what: &'static str,
        requested: u128,
        budget: u128,
    },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("unsupported polynomial degree {0} (supported: 1..=12)")]
    UnsupportedDegree(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("rasterization supports d = 1 or 2, got d = {0}; use the analytic volume sums instead")]
    UnsupportedDimension(usize),

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("masks do not share window and resolution")]
    WindowMismatch,

    #[error("bound undefined: {0}")]
    UndefinedBound(String),

    #[error("common prefix length is undefined for equal words")]
    EqualWords,

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn budget(what: &'static str, requested: u128, budget: u128) -> Self {
        Error::Budget {
            what,
            requested,
            budget,
        }
    }
}
