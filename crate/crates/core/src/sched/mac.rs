//! Schedulers for the multiple-access channel.

use std::f64::consts::E;

use rand::Rng;

use crate::error::{Error, Result};
use crate::oracle::Oracle;
use crate::rng::SimRng;
use crate::sched::{one_per_link, BernoulliClock, Recorder, Request, RunParams, ScheduleRun, StaticScheduler};

/// Symmetric acknowledgement-based algorithm: geometrically shrinking rounds
/// of uniform random delays, then a fixed-probability tail stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacSymmetric {
    pub phi: f64,
    pub delta: f64,
}

impl MacSymmetric {
    pub fn new(phi: f64, delta: f64) -> Result<Self> {
        if !(phi >= 1.0) || !(delta > 0.0) || !phi.is_finite() || !delta.is_finite() {
            return Err(Error::InvalidParameter("need phi >= 1 and delta > 0".into()));
        }
        Ok(MacSymmetric { phi, delta })
    }

    /// Per-round shrink factor `1 - 1/(e(1+delta))`.
    pub fn q(&self) -> f64 {
        1.0 - 1.0 / (E * (1.0 + self.delta))
    }

    /// Tail-stage threshold `s = 2 phi ln n * 2e^2 (1+delta)^2 / delta^2`.
    pub fn s(&self, n: f64) -> f64 {
        let d = self.delta;
        2.0 * self.phi * n.ln() * 2.0 * E * E * (1.0 + d) * (1.0 + d) / (d * d)
    }

    /// Smallest `xi >= 0` with `q^xi * size <= s`.
    pub fn xi(&self, size: u64, n: f64) -> u32 {
        let (q, s) = (self.q(), self.s(n));
        let mut xi = 0;
        let mut x = size as f64;
        while x > s {
            x *= q;
            xi += 1;
        }
        xi
    }

    pub fn round_len(&self, i: u32, size: u64) -> u64 {
        ((self.q().powi(i as i32) * size as f64).floor() as u64).max(1)
    }

    pub fn stage2_len(&self, n: f64) -> u64 {
        (self.s(n) * E * (self.phi + 1.0) * n.ln()).ceil() as u64
    }

    /// Length of a full run for `size` packets with parameter `n >= 2`.
    pub fn natural_length(&self, size: u64, n: f64) -> u64 {
        (1..=self.xi(size, n)).map(|i| self.round_len(i, size)).sum::<u64>() + self.stage2_len(n)
    }

    /// The additive term `g(., n)` of the affine bound.
    pub fn tail_bound(&self, n: f64) -> f64 {
        let slack = ((1.0 + self.delta) * E).ceil();
        if n < 2.0 {
            slack + 1.0
        } else {
            self.stage2_len(n) as f64 + slack
        }
    }
}

impl StaticScheduler for MacSymmetric {
    fn name(&self) -> &str {
        "mac-symmetric"
    }

    fn run(
        &self,
        requests: &[Request],
        params: &RunParams,
        oracle: &dyn Oracle,
        rng: &mut SimRng,
    ) -> Result<ScheduleRun> {
        let mut rec = Recorder::new(requests.len(), params.record_log);
        if requests.is_empty() {
            return Ok(rec.finish(0));
        }
        let n = params.n;
        if n < 2.0 {
            if params.limit(1) == 0 {
                return Ok(rec.finish(0));
            }
            let mut all: Vec<usize> = (0..requests.len()).collect();
            one_per_link(&mut all, requests, rng);
            rec.transmit(0, &all, requests, oracle)?;
            return Ok(rec.finish(1));
        }
        if !(params.interference >= 0.0) {
            return Err(Error::InvalidParameter("interference bound must be nonnegative".into()));
        }
        let size = params.interference.ceil() as u64;
        let limit = params.limit(self.natural_length(size, n));
        let mut offset = 0u64;
        let mut remaining: Vec<usize> = (0..requests.len()).collect();
        let mut keyed = Vec::new();
        let mut group = Vec::new();

        for i in 1..=self.xi(size, n) {
            if remaining.is_empty() || offset >= limit {
                break;
            }
            let len = self.round_len(i, size);
            keyed.clear();
            keyed.extend(remaining.iter().map(|&r| (rng.random_range(0..len), r)));
            keyed.sort_unstable();
            let mut pos = 0;
            while pos < keyed.len() {
                let delay = keyed[pos].0;
                let end = keyed[pos..].partition_point(|&(d, _)| d == delay) + pos;
                if offset + delay >= limit {
                    break;
                }
                group.clear();
                group.extend(keyed[pos..end].iter().map(|&(_, r)| r));
                one_per_link(&mut group, requests, rng);
                rec.transmit(offset + delay, &group, requests, oracle)?;
                pos = end;
            }
            remaining.retain(|&r| !rec.is_served(r));
            offset += len;
        }

        if !remaining.is_empty() && offset < limit {
            let p = (1.0 / self.s(n)).min(1.0);
            let mut clock = BernoulliClock::new(p, offset, remaining.iter().copied(), rng);
            let mut fired = Vec::new();
            while let Some(slot) = clock.peek() {
                if slot >= limit {
                    break;
                }
                clock.pop_at(slot, &mut fired);
                group.clone_from(&fired);
                one_per_link(&mut group, requests, rng);
                rec.transmit(slot, &group, requests, oracle)?;
                for &f in &fired {
                    if !rec.is_served(f) {
                        clock.rearm(f, slot, rng);
                    }
                }
                if rec.remaining() == 0 {
                    break;
                }
            }
        }
        let used = if rec.remaining() == 0 {
            rec.last_success().map_or(0, |s| s + 1)
        } else {
            limit
        };
        Ok(rec.finish(used))
    }
}

/// Runs the symmetric algorithm on `requests` packets sharing one channel.
pub fn mac_symmetric(
    requests: &[Request],
    phi: f64,
    delta: f64,
    oracle: &dyn Oracle,
    rng: &mut SimRng,
) -> Result<ScheduleRun> {
    let n = requests.len() as f64;
    MacSymmetric::new(phi, delta)?.run(requests, &RunParams::new(n, n).logged(), oracle, rng)
}

/// Token passing by silence: station `i` (link `i`) empties its queue, then
/// one silent slot hands the channel to station `i + 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RoundRobinWithholding;

impl StaticScheduler for RoundRobinWithholding {
    fn name(&self) -> &str {
        "round-robin-withholding"
    }

    fn run(
        &self,
        requests: &[Request],
        params: &RunParams,
        oracle: &dyn Oracle,
        _rng: &mut SimRng,
    ) -> Result<ScheduleRun> {
        if !oracle.provides_channel_state() {
            return Err(Error::FeedbackMismatch {
                scheduler: self.name().into(),
                oracle: oracle.name().into(),
            });
        }
        let stations = oracle.link_count();
        let mut queues = vec![Vec::new(); stations];
        for (i, r) in requests.iter().enumerate() {
            queues
                .get_mut(r.link.0)
                .ok_or(Error::UnknownLink(r.link))?
                .push(i);
        }
        let limit = params.limit((requests.len() + stations) as u64);
        let mut rec = Recorder::new(requests.len(), params.record_log);
        let mut slot = 0u64;
        'stations: for queue in &queues {
            for &i in queue {
                if slot >= limit {
                    break 'stations;
                }
                rec.transmit(slot, &[i], requests, oracle)?;
                slot += 1;
            }
            if slot >= limit {
                break;
            }
            rec.idle(slot, oracle)?;
            slot += 1;
        }
        Ok(rec.finish(slot))
    }
}

/// Runs round-robin-withholding with stations `0..oracle.link_count()`.
pub fn mac_round_robin_withholding(requests: &[Request], oracle: &dyn Oracle) -> Result<ScheduleRun> {
    let mut unused = crate::rng::seeded(0);
    let n = requests.len() as f64;
    RoundRobinWithholding.run(requests, &RunParams::new(n, n).logged(), oracle, &mut unused)
}

/// Requests for the given per-station queue lengths, ids in station order.
pub fn queue_requests(queues: &[usize]) -> Vec<Request> {
    let mut out = Vec::new();
    for (station, &len) in queues.iter().enumerate() {
        for _ in 0..len {
            out.push(Request::new(out.len() as u64, station));
        }
    }
    out
}
