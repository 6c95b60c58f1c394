//! Statistical evaluation of simulation output and the named scenarios.

pub mod experiments;
pub mod log;
pub mod report;
pub mod scenarios;
pub mod stats;

pub use experiments::{run_experiment, ExperimentOptions, EXPERIMENTS};
pub use log::{FrameRow, LatencyAcc, MetricsLog, PacketRow};
pub use report::{combine_stability, fmt_sig, Estimate, ExperimentReport, Verdict};
pub use scenarios::{local_clock_scenario, BlockedLongLinkOracle, LocalClockConfig};
pub use stats::{
    geometric_grid, latency_summary, latency_summary_from, ols, pooled_latency, potential_tail,
    potential_tail_logs, stability_estimate, t_quantile_95, LatencyGroup, LatencySummary, PotentialTail, StabilityEstimate,
    TailRow, DEFAULT_BURN_IN, MIN_STABILITY_FRAMES, STABILITY_BATCHES,
};
