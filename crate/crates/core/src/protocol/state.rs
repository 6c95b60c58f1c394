//! Protocol runtime state and the execution of a single frame.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Packet, PacketState};
use crate::oracle::Oracle;
use crate::protocol::frame::FrameConfig;
use crate::rng::SimRng;
use crate::sched::{Request, RunParams, SchedulerDescriptor};

#[derive(Debug, Clone, Default)]
pub struct ProtocolState {
    frame: u64,
    /// Waiting packets keyed by the frame in which they become active.
    pending: BTreeMap<u64, Vec<Packet>>,
    pending_count: usize,
    active: Vec<Packet>,
    /// Per-link failed packets, oldest arrival first.
    failed: Vec<VecDeque<Packet>>,
    failed_count: usize,
    potential: u64,
}

/// What happened during one frame.
#[derive(Debug, Clone, Default)]
pub struct FrameReport {
    pub frame: u64,
    pub activated: usize,
    pub phase1_requests: usize,
    pub phase1_successes: usize,
    pub new_failures: usize,
    /// Remaining-hop mass of the packets that failed this frame.
    pub new_failed_mass: u64,
    pub cleanup_selected: usize,
    pub cleanup_successes: usize,
    pub phase1_slots: u64,
    pub cleanup_slots: u64,
    pub delivered: Vec<Packet>,
}

impl ProtocolState {
    pub fn new(links: usize) -> Self {
        ProtocolState {
            failed: vec![VecDeque::new(); links],
            ..Default::default()
        }
    }

    pub fn frame(&self) -> u64 {
        self.frame
    }

    /// Queues a packet to become active at the start of `frame`.
    pub fn admit(&mut self, mut packet: Packet, frame: u64) {
        packet.state = PacketState::Waiting;
        self.pending.entry(frame).or_default().push(packet);
        self.pending_count += 1;
    }

    /// Puts a packet straight into a failed buffer, as if it failed at `slot`.
    pub fn fail_directly(&mut self, mut packet: Packet, slot: u64) -> Result<()> {
        let link = packet
            .next_link()
            .ok_or_else(|| Error::Invariant("delivered packet cannot fail".into()))?;
        packet.mark_failed(slot);
        self.potential += packet.remaining_hops() as u64;
        self.failed
            .get_mut(link.0)
            .ok_or(Error::UnknownLink(link))?
            .push_back(packet);
        self.failed_count += 1;
        Ok(())
    }

    pub fn pending_count(&self) -> usize {
        self.pending_count
    }

    pub fn active(&self) -> &[Packet] {
        &self.active
    }

    pub fn failed_buffers(&self) -> &[VecDeque<Packet>] {
        &self.failed
    }

    pub fn failed_count(&self) -> usize {
        self.failed_count
    }

    /// Undelivered packets anywhere in the system.
    pub fn backlog(&self) -> usize {
        self.pending_count + self.active.len() + self.failed_count
    }

    /// Remaining hops summed over failed packets.
    pub fn potential(&self) -> u64 {
        self.potential
    }

    /// [`Self::potential`] recomputed from scratch.
    pub fn potential_scan(&self) -> u64 {
        self.failed
            .iter()
            .flatten()
            .map(|p| p.remaining_hops() as u64)
            .sum()
    }

    /// Every undelivered packet, for end-of-run reporting.
    pub fn in_system(&self) -> impl Iterator<Item = &Packet> {
        self.pending
            .values()
            .flatten()
            .chain(self.active.iter())
            .chain(self.failed.iter().flatten())
    }
}

/// Random streams used inside a frame.
pub struct FrameRngs<'a> {
    pub scheduler: &'a mut SimRng,
    pub cleanup: &'a mut SimRng,
}

/// Executes frame `state.frame()`: activation, phase 1, clean-up.
pub fn run_frame(
    state: &mut ProtocolState,
    config: &FrameConfig,
    scheduler: &SchedulerDescriptor,
    oracle: &dyn Oracle,
    rngs: FrameRngs<'_>,
) -> Result<FrameReport> {
    let frame = state.frame;
    let base = frame * config.t;
    let mut report = FrameReport {
        frame,
        ..Default::default()
    };

    while let Some(entry) = state.pending.first_entry() {
        if *entry.key() > frame {
            break;
        }
        let batch = entry.remove();
        state.pending_count -= batch.len();
        report.activated += batch.len();
        for mut p in batch {
            p.state = PacketState::Active;
            state.active.push(p);
        }
    }

    // Phase 1 on the next hops of all unfailed packets.
    let active = std::mem::take(&mut state.active);
    let requests: Vec<Request> = active
        .iter()
        .map(|p| Request {
            id: p.id,
            link: p.next_link().expect("active packets are undelivered"),
        })
        .collect();
    report.phase1_requests = requests.len();
    let mut served_slot = vec![None; active.len()];
    if !requests.is_empty() {
        let params = RunParams::new(config.j, config.n()).with_budget(config.tprime);
        let run = scheduler.algorithm.run(&requests, &params, oracle, rngs.scheduler)?;
        if run.slots_used > config.tprime {
            return Err(Error::BudgetExceeded {
                used: run.slots_used,
                budget: config.tprime,
            });
        }
        report.phase1_slots = run.slots_used;
        for (i, slot) in run.served {
            served_slot[i] = Some(slot);
        }
    }
    let fail_stamp = base + config.tprime;
    for (mut p, served) in active.into_iter().zip(served_slot) {
        match served {
            Some(slot) => {
                report.phase1_successes += 1;
                if p.advance(base + slot) {
                    report.delivered.push(p);
                } else {
                    state.active.push(p);
                }
            }
            None => {
                report.new_failures += 1;
                report.new_failed_mass += p.remaining_hops() as u64;
                state.fail_directly(p, fail_stamp)?;
            }
        }
    }

    // Clean-up: each nonempty buffer offers its oldest packet with probability 1/m.
    let select = 1.0 / config.m as f64;
    let mut chosen = Vec::new();
    for (link, buf) in state.failed.iter().enumerate() {
        if !buf.is_empty() && rngs.cleanup.random::<f64>() < select {
            chosen.push(link);
        }
    }
    report.cleanup_selected = chosen.len();
    if !chosen.is_empty() {
        let requests: Vec<Request> = chosen
            .iter()
            .map(|&l| Request {
                id: state.failed[l][0].id,
                link: crate::model::LinkId(l),
            })
            .collect();
        let params = RunParams::new(1.0, config.n()).with_budget(config.cleanup);
        let run = scheduler.algorithm.run(&requests, &params, oracle, rngs.scheduler)?;
        if run.slots_used > config.cleanup {
            return Err(Error::BudgetExceeded {
                used: run.slots_used,
                budget: config.cleanup,
            });
        }
        report.cleanup_slots = run.slots_used;
        let start = base + config.tprime;
        let mut movers = Vec::with_capacity(run.served.len());
        for &(i, slot) in &run.served {
            let p = state.failed[chosen[i]]
                .pop_front()
                .expect("selected buffer is nonempty");
            movers.push((p, start + slot));
        }
        state.failed_count -= movers.len();
        report.cleanup_successes = movers.len();
        for (mut p, slot) in movers {
            state.potential -= 1;
            if p.advance(slot) {
                report.delivered.push(p);
            } else {
                let next = p.next_link().expect("undelivered");
                state.failed[next.0].push_back(p);
                state.failed_count += 1;
            }
        }
    }

    state.frame += 1;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{LinkId, NetworkInstance, PacketId, RoutePath};
    use crate::oracle::EdgeCapacityOracle;
    use crate::protocol::frame::compute_frame_params;
    use crate::rng::seeded;

    fn line() -> NetworkInstance {
        NetworkInstance::from_pairs(5, &[(0, 1), (1, 2), (2, 3), (3, 4)], 4).unwrap()
    }

    fn packet(net: &NetworkInstance, id: u64, hops: &[usize]) -> Packet {
        let path = RoutePath::new(net, hops.iter().copied().map(LinkId).collect()).unwrap();
        Packet::new(PacketId(id), Arc::new(path), 0)
    }

    fn step(state: &mut ProtocolState, cfg: &FrameConfig, sched: &SchedulerDescriptor, seed: u64) -> FrameReport {
        let (mut a, mut b) = (seeded(seed), seeded(seed + 1000));
        let o = EdgeCapacityOracle::new(4);
        run_frame(state, cfg, sched, &o, FrameRngs { scheduler: &mut a, cleanup: &mut b }).unwrap()
    }

    #[test]
    fn empty_frame_is_a_no_op() {
        let sched = SchedulerDescriptor::single_hop();
        let cfg = compute_frame_params(0.5, &sched, 4).unwrap();
        let mut st = ProtocolState::new(4);
        let r = step(&mut st, &cfg, &sched, 0);
        assert_eq!((r.activated, r.phase1_requests, r.cleanup_selected, r.delivered.len()), (0, 0, 0, 0));
        assert_eq!(st.frame(), 1);
    }

    #[test]
    fn uncontended_packet_is_delivered_in_phase_one() {
        let net = line();
        let sched = SchedulerDescriptor::single_hop();
        let cfg = compute_frame_params(0.5, &sched, 4).unwrap();
        let mut st = ProtocolState::new(4);
        let mut p = packet(&net, 0, &[2]);
        p.injection_slot = 17;
        st.admit(p, 1);
        assert!(step(&mut st, &cfg, &sched, 0).delivered.is_empty());
        let r = step(&mut st, &cfg, &sched, 1);
        assert_eq!(r.delivered.len(), 1);
        assert!(r.delivered[0].latency().unwrap() <= 2 * cfg.t);
        assert_eq!(st.backlog(), 0);
    }

    #[test]
    fn multi_hop_packet_crosses_one_hop_per_frame() {
        let net = line();
        let sched = SchedulerDescriptor::single_hop();
        let cfg = compute_frame_params(0.5, &sched, 4).unwrap();
        let mut st = ProtocolState::new(4);
        st.admit(packet(&net, 0, &[0, 1, 2]), 0);
        for f in 0..3 {
            let r = step(&mut st, &cfg, &sched, f);
            assert_eq!(r.delivered.len(), (f == 2) as usize);
        }
    }

    #[test]
    fn overload_fails_into_buffers_and_cleanup_reduces_potential() {
        let net = line();
        let sched = SchedulerDescriptor::single_hop();
        let cfg = compute_frame_params(0.5, &sched, 4).unwrap();
        let mut st = ProtocolState::new(4);
        let extra = cfg.tprime as usize + 3;
        for i in 0..extra {
            st.admit(packet(&net, i as u64, &[0, 1, 2]), 0);
        }
        let r = step(&mut st, &cfg, &sched, 0);
        assert_eq!(r.new_failures, 3);
        assert_eq!(r.new_failed_mass, 9);
        assert_eq!(st.potential(), 9 - r.cleanup_successes as u64);
        assert_eq!(st.potential(), st.potential_scan());
        let mut phi = st.potential();
        for f in 1..400 {
            let r = step(&mut st, &cfg, &sched, f);
            assert_eq!(st.potential(), phi + r.new_failed_mass - r.cleanup_successes as u64);
            assert_eq!(st.potential(), st.potential_scan());
            phi = st.potential();
        }
        assert_eq!(st.potential(), 0);
        assert_eq!(st.backlog(), 0);
    }

    #[test]
    fn failed_packets_never_return_to_phase_one() {
        let net = line();
        let sched = SchedulerDescriptor::single_hop();
        let cfg = compute_frame_params(0.5, &sched, 4).unwrap();
        let mut st = ProtocolState::new(4);
        st.fail_directly(packet(&net, 0, &[0, 1]), 0).unwrap();
        for f in 0..200 {
            let r = step(&mut st, &cfg, &sched, f);
            assert_eq!(r.phase1_requests, 0);
            assert!(st.active().is_empty());
        }
        assert_eq!(st.backlog(), 0);
    }
}
