use thiserror::Error;

use crate::graph::Violation;

#[derive(Debug, Error)]
pub enum KwError {
    #[error("malformed graph document: {0}")]
    Malformed(String),

    #[error("edge references unknown vertex id `{0}`")]
    UnknownVertex(String),

    #[error("invalid graph: {}", join_violations(.0))]
    InvalidGraph(Vec<Violation>),

    #[error("length mismatch: expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("alpha = {alpha} is not below lambda = {lambda}; the quadratic form is not a norm")]
    NotANorm { alpha: f64, lambda: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("subspace index {k} out of range (max {max})")]
    IndexOutOfRange { k: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("regime is UNBOUNDED_BELOW (alpha = {alpha}, beta = {beta}, k = {k}); use probe_divergence instead")]
    UnboundedRegime { alpha: f64, beta: f64, k: usize },

    #[error("regime is bounded (alpha = {alpha}, beta = {beta}, k = {k}); refusing to probe")]
    BoundedRegime { alpha: f64, beta: f64, k: usize },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = KwError> = std::result::Result<T, E>;
