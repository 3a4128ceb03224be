//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation requires clause width {expected}, formula has width {found}")]
    WrongClauseWidth { expected: usize, found: usize },

    #[error("operation requires edge arity {expected}, hypergraph has arity {found}")]
    WrongArity { expected: usize, found: usize },

    #[error("formula has {n_vars} variables, complete search is limited to {limit}")]
    VarLimitExceeded { n_vars: u32, limit: u32 },

    #[error("pattern length {value} outside supported range {lo}..={hi}")]
    LengthOutOfRange { value: usize, lo: usize, hi: usize },

    #[error("operation does not apply to model {0}")]
    WrongModel(String),

    #[error("moment order {0} unsupported, orders 1..=4 are implemented")]
    UnsupportedMomentOrder(u32),

    #[error("event {event} is not defined for model {model}")]
    UnsupportedEvent { event: String, model: String },

    #[error("integer range exceeded: {0}")]
    Overflow(String),

    #[error("requested work {requested} (n x trials) exceeds budget {budget}")]
    BudgetExceeded { requested: u64, budget: u64 },

    #[error("parameter grid must be non-empty and strictly increasing")]
    BadGrid,

    #[error(
        "initial interval does not bracket the target: p({lo}) = {p_lo}, p({hi}) = {p_hi}, target {target}"
    )]
    NonBracketing {
        lo: f64,
        hi: f64,
        p_lo: f64,
        p_hi: f64,
        target: f64,
    },

    #[error("degenerate parameters for this check: {0}")]
    DegenerateParams(String),

    #[error("batch outcome kind does not match: {0}")]
    WrongOutcomeKind(String),

    #[error("unknown formula id {0}")]
    UnknownFormula(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
