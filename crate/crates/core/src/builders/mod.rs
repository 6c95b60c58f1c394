//! Constructions of the interference matrix for each supported model.

pub mod conflict;
pub mod geometry;
pub mod sinr;

pub use conflict::{
    build_w_conflict, build_w_identity, build_w_mac, build_w_node_constraint,
    check_inductive_independence, ConflictGraph, InductiveCheck, INDUCTIVE_CHECK_CAP,
};
pub use geometry::{GeometricInstance, GeometryWarning, LinkGeometry};
pub use sinr::{
    build_w_linear, build_w_monotone, build_w_power_control, Affectance, PowerAssignment,
    PowerKind, SinrInstance, SinrMatrix, SinrParams,
};
