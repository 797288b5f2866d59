use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid edge ({0}, {1}) for a graph on {2} agents")]
    InvalidEdge(usize, usize, usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("could not generate connected geometric graph (n={n}, radius={radius}) after {attempts} attempts")]
    DisconnectedGeometric { n: usize, radius: f64, attempts: usize },

    #[error("base graph is not connected")]
    DisconnectedBase,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("sequence not contracting at window {tau} (lambda = {lambda:e})")]
    NotContracting { tau: usize, lambda: f64 },

    #[error("agent {agent} is not strongly convex (mu = {mu:e})")]
    NotStronglyConvex { agent: usize, mu: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("cannot split {rows} rows among {agents} agents")]
    TooFewRows { rows: usize, agents: usize },

    #[error("reference solver did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NoConvergence { iterations: usize, grad_norm: f64 },

    #[error("divergence at outer iteration {iteration}")]
    Divergence { iteration: usize },
}
