use thiserror::Error;

use crate::model::{LinkId, NodeId};

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("duplicate node {0}")]
    DuplicateNode(NodeId),

    #[error("unknown link {0}")]
    UnknownLink(LinkId),

    #[error("link {link} is a self loop at node {node}")]
    SelfLoop { link: LinkId, node: NodeId },

    #[error("link ids must be dense and ordered: expected {expected}, found {found}")]
    LinkOrder { expected: usize, found: usize },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("power assignment violates the {kind} invariant at links {first} and {second}")]
    PowerInvariant {
        kind: &'static str,
        first: LinkId,
        second: LinkId,
    },

    #[error("ordering is not a permutation of the {0} links")]
    NotAPermutation(usize),

    #[error("duplicate attempt on link {0} in one slot")]
    DuplicateAttempt(LinkId),

    #[error("scheduler {scheduler} needs channel-state feedback, oracle {oracle} only acknowledges")]
    FeedbackMismatch { scheduler: String, oracle: String },

    #[error("scheduler {0} has the wrong bound profile for this use")]
    ProfileMismatch(String),

    #[error("bound profile of {scheduler} is invalid: {reason}")]
    InvalidProfile { scheduler: String, reason: String },

    #[error("no frame length up to {limit} slots satisfies the frame constraints")]
    FrameSearchExhausted { limit: u64 },

    #[error("phases do not fit into a frame: {phase1} + {cleanup} > {frame}")]
    PhasesDoNotFit { phase1: u64, cleanup: u64, frame: u64 },

    #[error("adversarial trace violates the ({window}, {rate}) bound in the window starting at slot {start}")]
    TraceViolation { window: u64, rate: f64, start: u64 },

    #[error("requested injection is infeasible: {0}")]
    InfeasibleInjection(String),

    #[error("scheduler exceeded its slot budget: used {used} of {budget}")]
    BudgetExceeded { used: u64, budget: u64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
