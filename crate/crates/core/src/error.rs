use thiserror::Error;

/// Errors raised across the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state index {0} out of range ({1} states)")]
    InvalidState(usize, usize),

    #[error("action index {action} out of range for state {state} ({count} actions)")]
    InvalidAction {
        state: usize,
        action: usize,
        count: usize,
    },

    #[error("invalid task: {0}")]
    InvalidTask(String),

    #[error("policy does not reach the terminal state from state {0}")]
    NonTerminating(usize),

    #[error("policy space has {0} policies, above the enumeration limit")]
    PolicySpaceTooLarge(u128),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate triangle has no gain update")]
    DegenerateTriangle,

    #[error("triangle violates the enclosing conditions: {0}")]
    InvalidTriangle(String),

    #[error("level set misses the triangle (inconsistent value {0})")]
    InconsistentValue(f64),

    #[error("singular conic")]
    SingularConic,

    #[error("degenerate conic could not be split into lines")]
    LineExtraction,

    #[error("no root of the uncertainty balance inside the gain interval")]
    NoGainRoot,

    #[error("solver did not converge within its budget")]
    NotConverged,

    #[error("no policy with positive gain")]
    NoPositiveGain,

    #[error("average reward estimate diverged: {0}")]
    Diverged(f64),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
