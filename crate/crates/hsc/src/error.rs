use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed token `{token}`")]
    Parse { line: usize, token: String },
    #[error("line {line}: node id {node} repeated within an edge")]
    RepeatedNode { line: usize, node: usize },
    #[error("line {line}: an edge needs at least two distinct nodes")]
    ShortEdge { line: usize },
    #[error("input contains no edges")]
    Empty,
    #[error("node index {node} out of range for n = {n}")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("label {label} out of range for {groups} groups")]
    LabelOutOfRange { label: usize, groups: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dense limit exceeded: dimension {dim} > {limit}")]
    DenseLimit { dim: usize, limit: usize },
    #[error("mu = {mu} lies within {margin} of a pole")]
    NearPole { mu: String, margin: f64 },
    #[error("eigensolver did not converge: {converged} of {wanted} pairs within tolerance")]
    NotConverged { converged: usize, wanted: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
