use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid move plan: {0}")]
    InvalidPlan(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("size guard exceeded: {0}")]
    GuardExceeded(String),
    #[error("non-termination guard tripped after {0} elementary steps")]
    StepGuard(usize),
    #[error("interval precision exhausted: {0}")]
    Precision(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
