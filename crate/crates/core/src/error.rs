//! Crate-wide error type. Every failure names the offending node or edge where
//! one exists, so CLI diagnostics can point at the input that broke.

use thiserror::Error;

use crate::network::NodeId;

/// Unified error for model construction, file I/O, and bound evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("graph contains a directed cycle involving node {0}")]
    Cycle(NodeId),

    #[error("node {node}: prior {p} outside [0, 1]")]
    PriorOutOfRange { node: NodeId, p: f64 },

    #[error("node {0} has no parents but no prior was given")]
    MissingRootPrior(NodeId),

    #[error("node {0} has parents, so a prior entry is not allowed")]
    PriorOnNonRoot(NodeId),

    #[error("edge {child} <- {parent}: negative noisy-OR weight {theta}")]
    NegativeNoisyOrWeight {
        child: NodeId,
        parent: NodeId,
        theta: f64,
    },

    #[error("edge {child} <- {parent}: failure probability q={q} outside [0, 1); q = 1 encodes a deterministic link, which has infinite weight")]
    FailureProbOutOfRange {
        child: NodeId,
        parent: NodeId,
        q: f64,
    },

    #[error("edge {child} <- {parent}: duplicate edge")]
    DuplicateEdge { child: NodeId, parent: NodeId },

    #[error("edge {child} <- {parent}: {side} endpoint index out of range for n={n}")]
    EdgeOutOfRange {
        child: NodeId,
        parent: NodeId,
        side: &'static str,
        n: usize,
    },

    #[error("node index {0} out of range for n={1}")]
    NodeOutOfRange(NodeId, usize),

    #[error("layer declaration invalid: {0}")]
    BadLayers(String),

    #[error("operation requires a bipartite network with declared layers")]
    NotBipartite,

    #[error("evidence must assign exactly the bottom layer; node {node} is {problem}")]
    EvidenceMismatch { node: NodeId, problem: &'static str },

    #[error("{count} unassigned nodes exceed the enumeration cap of {cap}")]
    EnumerationCapExceeded { count: usize, cap: usize },

    #[error("node {node}: fan-in {fan_in} exceeds the exact-expectation cap of {cap}; use the auxiliary mode")]
    FanInExceeded {
        node: NodeId,
        fan_in: usize,
        cap: usize,
    },

    #[error("evidence has probability zero; conditional quantities are undefined")]
    ZeroProbabilityEvidence,

    #[error("{what}: argument {value} outside domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("network kind {found} does not support this operation (expected {expected})")]
    WrongKind {
        expected: &'static str,
        found: &'static str,
    },

    #[error("state vector length {found} does not match network size {expected}")]
    StateLength { expected: usize, found: usize },

    #[error("mean vector length {found} does not match network size {expected}")]
    MeanLength { expected: usize, found: usize },

    #[error("malformed network file: {0}")]
    Malformed(String),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
