use thiserror::Error;

use crate::deployment::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("reading windows differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("reading window needs at least 2 samples, got {0}")]
    WindowTooShort(usize),

    #[error("reading window has zero variance; correlation is undefined")]
    DegenerateWindow,

    #[error("position ({x}, {y}) lies outside the {width} x {height} field")]
    OutOfField { x: f64, y: f64, width: f64, height: f64 },

    #[error("deployment has no cluster heads")]
    NoHeads,

    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("deployment carries no head grid; random tracing points need one")]
    MissingHeadGrid,

    #[error("no tracing point paired with head {0}")]
    MissingTracingPoint(NodeId),

    #[error("kernel covariance is not positive definite, even after diagonal jitter")]
    NotPositiveDefinite,

    #[error("sweep never settles within epsilon = {0}")]
    NoPlateau(f64),

    #[error("experiment property violated: {0}")]
    PropertyViolation(String),

    #[error("malformed input at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
