//! The frame-based dynamic protocol.
//!
//! Time is cut into frames of `T` slots. Phase 1 runs the static scheduler on
//! the next hops of all unfailed packets; packets it does not serve become
//! failed and are afterwards only retried in the clean-up phase, where every
//! nonempty failed buffer offers its oldest packet with probability `1/m`.

pub mod frame;
pub mod sim;
pub mod state;

pub use frame::{
    adversarial_params, compute_frame_params, frame_params_with_t, min_fitting_frame_len, DelayWrapperConfig, FrameConfig,
    FRAME_SEARCH_LIMIT,
};
pub use sim::{run_simulation, InjectionSource, Simulation};
pub use state::{run_frame, FrameReport, FrameRngs, ProtocolState};
