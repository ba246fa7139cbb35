use thiserror::Error;

/// Errors produced by the workbench.
///
/// `Undecided` is kept apart from ordinary failures so callers can tell
/// "the truncation is too small to say" from "the answer is no".
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FipError {
    #[error("index {index} out of bounds (index_bound = {bound})")]
    IndexOutOfBounds { index: usize, bound: usize },

    #[error("undecidable at this truncation: {0}")]
    Undecided(String),

    #[error("family is trivial: every set is empty on the decided truncation")]
    TrivialFamily,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("marker undecided: no even member is decided")]
    MarkerUndecided,

    #[error("malformed set {index}: {reason}")]
    MalformedSet { index: usize, reason: String },

    #[error("chosen subfamily does not satisfy {0}")]
    ChosenFailsProperty(String),

    #[error("chosen subfamily is not maximal: index {extending} extends it")]
    NotMaximal { extending: usize },

    #[error("degenerate solution: {0}")]
    DegenerateSolution(String),

    #[error("monotonicity violated on set {index}: {reason}")]
    Monotonicity { index: usize, reason: String },

    #[error("search exhausted: {0}")]
    Exhausted(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("corrupt trace: {0}")]
    CorruptTrace(String),

    #[error("bound exceeded: {0}")]
    BoundExceeded(String),
}

impl From<std::io::Error> for FipError {
    fn from(e: std::io::Error) -> Self {
        FipError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FipError>;
