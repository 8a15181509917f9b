use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A search visited more states than its budget allows. This is never
    /// reported as a negative answer.
    #[error("budget exhausted: {what} exceeded limit {limit}")]
    BudgetExhausted { what: &'static str, limit: usize },

    #[error("size cap exceeded: {what} is {requested}, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("precedence relation between per-stack strings is cyclic")]
    CyclicPrecedence,

    #[error("rule {index} ({from} -> {to}) is invalid: {reason}")]
    InvalidRule {
        index: usize,
        from: String,
        to: String,
        reason: String,
    },

    #[error("polynomial arity mismatch: {0} vs {1}")]
    ArityMismatch(usize, usize),

    #[error("denominator constant term must be 1 or -1 for integer series expansion, got {0}")]
    NonUnitConstantTerm(String),

    #[error("no sign change of the polynomial found in (0, 1]")]
    NoSignChange,

    #[error("no feasible point found: {0}")]
    NoFeasiblePoint(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
