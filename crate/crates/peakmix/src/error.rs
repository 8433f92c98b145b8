//! Crate-wide error types.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the generic inference engine.
#[derive(Debug, Error)]
pub enum EngineError {
    #[error("node {0} does not exist")]
    NodeNotFound(usize),
    #[error("invalid CPT for node {node}: {detail}")]
    InvalidCpt { node: usize, detail: String },
    #[error("invalid auxiliary factor: {0}")]
    InvalidFactor(String),
    #[error("auxiliary node {0} cannot be used as a parent")]
    AuxParent(usize),
    #[error("clique tree is invalid: {0}")]
    InvalidTree(crate::engine::TreeViolation),
    #[error("family of node {0} is not contained in any clique")]
    FamilyNotCovered(usize),
    #[error("evidence vector for node {node} has length {got}, expected {expected}")]
    EvidenceLength {
        node: usize,
        got: usize,
        expected: usize,
    },
    #[error("evidence vector for node {0} has a negative entry")]
    NegativeEvidence(usize),
    #[error("no evidence recorded on node {0}")]
    NoEvidence(usize),
    #[error("charge is not on canonical form; call propagate first")]
    NotCanonical,
    #[error("evidence has zero probability under the model")]
    ImpossibleEvidence,
    #[error("node set is not contained in a single clique")]
    NoCoveringClique,
    #[error("state space of {0} cells exceeds the configured maximum")]
    StateSpaceTooLarge(u64),
    #[error("network structure does not match the charge")]
    StructureMismatch,
}

/// Top-level error for model building, I/O and numerics.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{0}")]
    Domain(String),
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn parse(file: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: msg.into(),
        }
    }
}
