use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("type error: {0}")]
    Type(String),

    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),

    #[error("trace appears in both the positive and the negative set: {0}")]
    DisjointnessViolation(String),

    #[error("invalid proposition set: {0}")]
    InvalidPropositions(String),

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("invalid node budget: m = {m} with n = {n}")]
    InvalidBudget { n: usize, m: usize },

    #[error("sample generation produced an empty {0} set; the seed formula is trivial on the sampled space")]
    DegenerateSample(&'static str),

    #[error("malformed solver model: {0}")]
    MalformedModel(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
