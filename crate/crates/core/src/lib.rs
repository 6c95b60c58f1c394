//! Dynamic packet scheduling in interference-limited wireless networks.
//!
//! The crate models a network as a set of directed links whose mutual
//! interference is summarised by a weight matrix `W`; the load of a request
//! vector `R` is the linear measure `||W R||_inf`. Static schedulers serve a
//! batch of requests in time proportional to that measure, and the
//! frame-based dynamic protocol turns any such scheduler into a stable
//! protocol for stochastic and window-bounded adversarial injections.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod builders;
pub mod error;
pub mod injection;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod protocol;
pub mod rng;
pub mod scalar;
pub mod sched;

use num_rational::Ratio;

pub use error::{Error, Result};
pub use model::{
    interference_measure, request_vector, validate_matrix, InterferenceMatrix, Link, LinkId,
    NetworkInstance, NodeId, Packet, PacketId, PacketState, RequestVector, RoutePath,
};
pub use scalar::{Real, Weight};

/// Double precision interference matrix, the default everywhere.
pub type Matrix = InterferenceMatrix<f64>;
pub type Matrix32 = InterferenceMatrix<f32>;
/// Exact matrix for combinatorial models, whose weights are 0/1 or simple fractions.
pub type ExactMatrix = InterferenceMatrix<Ratio<i64>>;
