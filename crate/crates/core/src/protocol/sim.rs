//! Slot-accurate top-level loop: injections plus frames.

use std::sync::Arc;

use crate::error::Result;
use crate::injection::{ensure_valid_trace, AdversarialTrace, InjectionSampler, StochasticSpec};
use crate::metrics::log::{FrameRow, MetricsLog, PacketRow};
use crate::model::{InterferenceMatrix, Packet, PacketId, RoutePath};
use crate::oracle::Oracle;
use crate::protocol::frame::{DelayWrapperConfig, FrameConfig};
use crate::protocol::state::{run_frame, FrameRngs, ProtocolState};
use crate::rng::{substream, SimRng, Stream};
use crate::sched::SchedulerDescriptor;

#[derive(Debug, Clone)]
pub enum InjectionSource {
    None,
    Stochastic(Arc<StochasticSpec>),
    /// Replayed trace; each packet additionally waits a random number of frames.
    Adversarial {
        trace: AdversarialTrace,
        wrapper: DelayWrapperConfig,
    },
}

pub struct Simulation<'a> {
    pub matrix: &'a InterferenceMatrix<f64>,
    pub frame: FrameConfig,
    pub scheduler: &'a SchedulerDescriptor,
    pub oracle: &'a dyn Oracle,
    pub source: InjectionSource,
    pub horizon: u64,
    pub seed: u64,
    pub record_packets: bool,
}

#[allow(clippy::large_enum_variant)] // one per simulation
enum Feed {
    None,
    Sampler(InjectionSampler),
    Trace {
        trace: AdversarialTrace,
        next: usize,
        wrapper: DelayWrapperConfig,
        delays: SimRng,
    },
}

impl Feed {
    /// Injections in `[start, end)` with the frame each becomes active.
    fn take(&mut self, start: u64, end: u64, frame: u64, out: &mut Vec<(u64, Arc<RoutePath>, u64)>) {
        out.clear();
        match self {
            Feed::None => {}
            Feed::Sampler(s) => {
                out.extend(s.sample_range(start, end).into_iter().map(|(slot, _, p)| (slot, p, frame + 1)));
            }
            Feed::Trace {
                trace,
                next,
                wrapper,
                delays,
            } => {
                let inj = trace.injections();
                while *next < inj.len() && inj[*next].0 < end {
                    let (slot, path) = &inj[*next];
                    let delta = wrapper.draw_delay(delays);
                    out.push((*slot, path.clone(), frame + 1 + delta));
                    *next += 1;
                }
            }
        }
    }
}

/// Runs `horizon` frames and records the metrics.
pub fn run_simulation(sim: &Simulation<'_>) -> Result<MetricsLog> {
    sim.scheduler.check_oracle(sim.oracle)?;
    let links = sim.oracle.link_count();
    let mut feed = match &sim.source {
        InjectionSource::None => Feed::None,
        InjectionSource::Stochastic(spec) => Feed::Sampler(InjectionSampler::new(spec.clone(), sim.seed)),
        InjectionSource::Adversarial { trace, wrapper } => {
            ensure_valid_trace(trace, sim.matrix)?;
            Feed::Trace {
                trace: trace.clone(),
                next: 0,
                wrapper: *wrapper,
                delays: substream(sim.seed, Stream::Delay),
            }
        }
    };
    let mut sched_rng = substream(sim.seed, Stream::Scheduler);
    let mut cleanup_rng = substream(sim.seed, Stream::Cleanup);
    let mut state = ProtocolState::new(links);
    let mut log = MetricsLog {
        frame_len: sim.frame.t,
        m: sim.frame.m,
        j: sim.frame.j,
        out_of_theory: sim.frame.out_of_theory,
        packets: sim.record_packets.then(Vec::new),
        ..Default::default()
    };
    log.frames.reserve(sim.horizon as usize);
    let t = sim.frame.t;
    let mut next_id = 0u64;
    let mut batch = Vec::new();
    for frame in 0..sim.horizon {
        feed.take(frame * t, (frame + 1) * t, frame, &mut batch);
        let injections = batch.len() as u64;
        for (slot, path, active_at) in batch.drain(..) {
            state.admit(Packet::new(PacketId(next_id), path, slot), active_at);
            next_id += 1;
        }
        let report = run_frame(
            &mut state,
            &sim.frame,
            sim.scheduler,
            sim.oracle,
            FrameRngs {
                scheduler: &mut sched_rng,
                cleanup: &mut cleanup_rng,
            },
        )?;
        for p in &report.delivered {
            log.record_delivery(p);
        }
        log.frames.push(FrameRow {
            frame,
            backlog: state.backlog() as u64,
            failed_backlog: state.failed_count() as u64,
            potential: state.potential(),
            injections,
            deliveries: report.delivered.len() as u64,
            cleanup_successes: report.cleanup_successes as u64,
        });
    }
    if let Some(rows) = &mut log.packets {
        rows.extend(state.in_system().map(PacketRow::of));
        rows.sort_by_key(|r| r.id);
    }
    Ok(log)
}
