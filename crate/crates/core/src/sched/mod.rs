//! Static schedulers: serve a fixed batch of link requests in few slots.
//!
//! Every scheduler is a [`StaticScheduler`]; a [`SchedulerDescriptor`] pairs
//! one with its bound profile and feedback requirement so that the dynamic
//! protocol can size its frames.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LinkId, PacketId};
use crate::oracle::Oracle;
use crate::rng::SimRng;

pub mod dense;
pub mod mac;
pub mod random_access;
pub mod single_hop;
pub mod validate;

pub use dense::{dense_accounting, DenseAccounting, DenseScheduler};
pub use mac::{mac_round_robin_withholding, mac_symmetric, MacSymmetric, RoundRobinWithholding};
pub use random_access::{run_random_access, RandomAccess, DEFAULT_CAP_CONSTANT};
pub use single_hop::SingleHop;
pub use validate::{validate_schedule, ScheduleValidation};

/// One packet waiting to cross `link`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Request {
    pub id: PacketId,
    pub link: LinkId,
}

impl Request {
    pub fn new(id: u64, link: usize) -> Self {
        Request {
            id: PacketId(id),
            link: LinkId(link),
        }
    }
}

/// The `(I, n)` arguments of a run plus a hard slot budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunParams {
    /// Upper bound on the interference measure of the requests.
    pub interference: f64,
    /// Size parameter governing the failure probability.
    pub n: f64,
    pub budget: Option<u64>,
    pub record_log: bool,
}

impl RunParams {
    pub fn new(interference: f64, n: f64) -> Self {
        RunParams {
            interference,
            n,
            budget: None,
            record_log: false,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn logged(mut self) -> Self {
        self.record_log = true;
        self
    }

    pub(crate) fn limit(&self, natural: u64) -> u64 {
        self.budget.map_or(natural, |b| b.min(natural))
    }
}

/// Attempts and outcomes of one slot that carried at least one transmission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotRecord {
    pub slot: u64,
    /// `(request index, link)` of each attempt.
    pub attempts: Vec<(usize, LinkId)>,
    pub success: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScheduleRun {
    pub slots_used: u64,
    /// `(request index, slot)` of each served request.
    pub served: Vec<(usize, u64)>,
    pub unserved: Vec<usize>,
    pub log: Option<Vec<SlotRecord>>,
}

impl ScheduleRun {
    pub fn all_served(&self) -> bool {
        self.unserved.is_empty()
    }
}

pub trait StaticScheduler: Send + Sync {
    fn name(&self) -> &str;

    fn run(
        &self,
        requests: &[Request],
        params: &RunParams,
        oracle: &dyn Oracle,
        rng: &mut SimRng,
    ) -> Result<ScheduleRun>;
}

/// Bookkeeping shared by all schedulers.
pub(crate) struct Recorder {
    served_at: Vec<Option<u64>>,
    remaining: usize,
    log: Option<Vec<SlotRecord>>,
    links: Vec<LinkId>,
    last_success: Option<u64>,
}

impl Recorder {
    pub(crate) fn new(requests: usize, record_log: bool) -> Self {
        Recorder {
            served_at: vec![None; requests],
            remaining: requests,
            log: record_log.then(Vec::new),
            links: Vec::new(),
            last_success: None,
        }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.remaining
    }

    pub(crate) fn is_served(&self, idx: usize) -> bool {
        self.served_at[idx].is_some()
    }

    pub(crate) fn last_success(&self) -> Option<u64> {
        self.last_success
    }

    /// Evaluates one slot; `attempts` are request indices on distinct links.
    pub(crate) fn transmit(
        &mut self,
        slot: u64,
        attempts: &[usize],
        requests: &[Request],
        oracle: &dyn Oracle,
    ) -> Result<Vec<bool>> {
        self.links.clear();
        self.links.extend(attempts.iter().map(|&i| requests[i].link));
        let fb = oracle.evaluate(&self.links)?;
        for (&i, &ok) in attempts.iter().zip(&fb.success) {
            if ok {
                if self.served_at[i].is_some() {
                    return Err(Error::Invariant(format!("request {i} served twice")));
                }
                self.served_at[i] = Some(slot);
                self.remaining -= 1;
                self.last_success = Some(slot);
            }
        }
        if let Some(log) = &mut self.log {
            log.push(SlotRecord {
                slot,
                attempts: attempts.iter().map(|&i| (i, requests[i].link)).collect(),
                success: fb.success.clone(),
            });
        }
        Ok(fb.success)
    }

    /// Logs an observed idle slot (only channel-state schedulers need it).
    pub(crate) fn idle(&mut self, slot: u64, oracle: &dyn Oracle) -> Result<()> {
        oracle.evaluate(&[])?;
        if let Some(log) = &mut self.log {
            log.push(SlotRecord {
                slot,
                attempts: Vec::new(),
                success: Vec::new(),
            });
        }
        Ok(())
    }

    /// Merges a sub-run over `members` (sub-run index `j` is `members[j]`)
    /// that started at slot `offset`.
    pub(crate) fn absorb(&mut self, run: &ScheduleRun, members: &[usize], offset: u64) -> Result<()> {
        for &(j, slot) in &run.served {
            let i = members[j];
            if self.served_at[i].is_some() {
                return Err(Error::Invariant(format!("request {i} served twice")));
            }
            let at = offset + slot;
            self.served_at[i] = Some(at);
            self.remaining -= 1;
            self.last_success = Some(self.last_success.map_or(at, |s| s.max(at)));
        }
        if let (Some(log), Some(sub)) = (&mut self.log, &run.log) {
            log.extend(sub.iter().map(|r| SlotRecord {
                slot: offset + r.slot,
                attempts: r.attempts.iter().map(|&(j, l)| (members[j], l)).collect(),
                success: r.success.clone(),
            }));
        }
        Ok(())
    }

    pub(crate) fn finish(self, slots_used: u64) -> ScheduleRun {
        let mut served = Vec::new();
        let mut unserved = Vec::new();
        for (i, s) in self.served_at.into_iter().enumerate() {
            match s {
                Some(slot) => served.push((i, slot)),
                None => unserved.push(i),
            }
        }
        served.sort_by_key(|&(i, slot)| (slot, i));
        ScheduleRun {
            slots_used,
            served,
            unserved,
            log: self.log,
        }
    }
}

/// Keeps one attempt per link: among `winners` sharing a link, one is drawn
/// uniformly. `winners` is reordered in place.
pub(crate) fn one_per_link(winners: &mut Vec<usize>, requests: &[Request], rng: &mut SimRng) {
    if winners.len() < 2 {
        return;
    }
    winners.sort_unstable_by_key(|&i| (requests[i].link, i));
    let mut out = 0;
    let mut start = 0;
    while start < winners.len() {
        let link = requests[winners[start]].link;
        let mut end = start + 1;
        while end < winners.len() && requests[winners[end]].link == link {
            end += 1;
        }
        let pick = if end - start == 1 {
            start
        } else {
            rng.random_range(start..end)
        };
        winners[out] = winners[pick];
        out += 1;
        start = end;
    }
    winners.truncate(out);
}

/// Independent per-slot Bernoulli(p) trials for a set of requests, simulated
/// by jumping straight to each request's next success.
pub(crate) struct BernoulliClock {
    heap: BinaryHeap<Reverse<(u64, usize)>>,
    gap: Option<Geometric>,
}

impl BernoulliClock {
    pub(crate) fn new(p: f64, start: u64, members: impl IntoIterator<Item = usize>, rng: &mut SimRng) -> Self {
        let gap = if p >= 1.0 {
            None
        } else {
            Some(Geometric::new(p).expect("probability in (0, 1)"))
        };
        let mut clock = BernoulliClock {
            heap: BinaryHeap::new(),
            gap,
        };
        for i in members {
            let at = start + clock.draw(rng);
            clock.heap.push(Reverse((at, i)));
        }
        clock
    }

    fn draw(&self, rng: &mut SimRng) -> u64 {
        self.gap.as_ref().map_or(0, |g| g.sample(rng))
    }

    pub(crate) fn peek(&self) -> Option<u64> {
        self.heap.peek().map(|Reverse((t, _))| *t)
    }

    /// Removes every member firing at `slot` into `out`, in index order.
    pub(crate) fn pop_at(&mut self, slot: u64, out: &mut Vec<usize>) {
        out.clear();
        while let Some(&Reverse((t, i))) = self.heap.peek() {
            if t != slot {
                break;
            }
            self.heap.pop();
            out.push(i);
        }
    }

    /// Schedules `member`'s next firing strictly after `slot`.
    pub(crate) fn rearm(&mut self, member: usize, slot: u64, rng: &mut SimRng) {
        let at = slot + 1 + self.draw(rng);
        self.heap.push(Reverse((at, member)));
    }
}

pub type ProfileFn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type ProfileFn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Schedule length guarantee of a scheduler.
#[derive(Clone)]
pub enum BoundProfile {
    /// `f(n) * I` slots, failure probability at most `1/n`.
    Multiplicative { f: ProfileFn1 },
    /// `f(m) * I + g(m, n)` slots, failure probability at most `1/(2 n^4)`.
    Affine { f: ProfileFn1, g: ProfileFn2 },
}

impl fmt::Debug for BoundProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundProfile::Multiplicative { .. } => f.write_str("Multiplicative"),
            BoundProfile::Affine { .. } => f.write_str("Affine"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedbackNeed {
    AckOnly,
    ChannelState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetry {
    Symmetric,
    IdBased,
}

#[derive(Clone)]
pub struct SchedulerDescriptor {
    pub name: String,
    pub algorithm: Arc<dyn StaticScheduler>,
    pub profile: BoundProfile,
    pub feedback: FeedbackNeed,
    pub symmetry: Symmetry,
}

impl fmt::Debug for SchedulerDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SchedulerDescriptor")
            .field("name", &self.name)
            .field("profile", &self.profile)
            .field("feedback", &self.feedback)
            .field("symmetry", &self.symmetry)
            .finish()
    }
}

impl SchedulerDescriptor {
    /// Random access with transmission probability `1/(4I)`; `f(n) = c log2(n+1)`.
    pub fn random_access(c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidParameter("cap constant must be positive".into()));
        }
        Ok(SchedulerDescriptor {
            name: format!("random-access(c={c})"),
            algorithm: Arc::new(RandomAccess::new(c)),
            profile: BoundProfile::Multiplicative {
                f: Arc::new(move |n| c * (n + 1.0).log2()),
            },
            feedback: FeedbackNeed::AckOnly,
            symmetry: Symmetry::Symmetric,
        })
    }

    pub fn mac_symmetric(phi: f64, delta: f64) -> Result<Self> {
        let alg = MacSymmetric::new(phi, delta)?;
        let f_const = (1.0 + delta) * std::f64::consts::E;
        let g_alg = alg;
        Ok(SchedulerDescriptor {
            name: format!("mac-symmetric(phi={phi},delta={delta})"),
            algorithm: Arc::new(alg),
            profile: BoundProfile::Affine {
                f: Arc::new(move |_| f_const),
                g: Arc::new(move |_, n| g_alg.tail_bound(n)),
            },
            feedback: FeedbackNeed::AckOnly,
            symmetry: Symmetry::Symmetric,
        })
    }

    pub fn round_robin_withholding() -> Self {
        SchedulerDescriptor {
            name: "round-robin-withholding".into(),
            algorithm: Arc::new(RoundRobinWithholding),
            profile: BoundProfile::Affine {
                f: Arc::new(|_| 1.0),
                g: Arc::new(|m, _| m),
            },
            feedback: FeedbackNeed::ChannelState,
            symmetry: Symmetry::IdBased,
        }
    }

    /// Every link sends one queued packet per slot; exact for packet routing.
    pub fn single_hop() -> Self {
        SchedulerDescriptor {
            name: "single-hop".into(),
            algorithm: Arc::new(SingleHop),
            profile: BoundProfile::Affine {
                f: Arc::new(|_| 1.0),
                g: Arc::new(|_, _| 0.0),
            },
            feedback: FeedbackNeed::AckOnly,
            symmetry: Symmetry::Symmetric,
        }
    }

    /// The dense-instance transformation around a multiplicative `base`,
    /// for networks of size `m`.
    pub fn dense(base: &SchedulerDescriptor, phi: f64, m: usize) -> Result<Self> {
        let f_base = base.multiplicative()?;
        let alg = DenseScheduler::new(base.algorithm.clone(), f_base.clone(), phi, m)?;
        let (fa, fb) = (f_base.clone(), f_base);
        Ok(SchedulerDescriptor {
            name: format!("dense({}, phi={phi})", base.name),
            algorithm: Arc::new(alg),
            profile: BoundProfile::Affine {
                f: Arc::new(move |m| dense::profile_f(&fa, m)),
                g: Arc::new(move |m, n| dense::profile_g(&fb, phi, m, n)),
            },
            feedback: base.feedback,
            symmetry: base.symmetry,
        })
    }

    pub fn multiplicative(&self) -> Result<ProfileFn1> {
        match &self.profile {
            BoundProfile::Multiplicative { f } => Ok(f.clone()),
            BoundProfile::Affine { .. } => Err(Error::ProfileMismatch(self.name.clone())),
        }
    }

    pub fn affine(&self) -> Result<(ProfileFn1, ProfileFn2)> {
        match &self.profile {
            BoundProfile::Affine { f, g } => Ok((f.clone(), g.clone())),
            BoundProfile::Multiplicative { .. } => Err(Error::ProfileMismatch(self.name.clone())),
        }
    }

    /// Rejects oracles that cannot deliver the feedback this scheduler needs.
    pub fn check_oracle(&self, oracle: &dyn Oracle) -> Result<()> {
        if self.feedback == FeedbackNeed::ChannelState && !oracle.provides_channel_state() {
            return Err(Error::FeedbackMismatch {
                scheduler: self.name.clone(),
                oracle: oracle.name().to_string(),
            });
        }
        Ok(())
    }

    /// Checks `f >= 0` nondecreasing, `g >= 0`, and `g(m, 2n) / g(m, n) < 2`
    /// at the top of a doubling ladder.
    pub fn check_profile(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidProfile {
            scheduler: self.name.clone(),
            reason,
        };
        let f = match &self.profile {
            BoundProfile::Multiplicative { f } | BoundProfile::Affine { f, .. } => f,
        };
        let mut prev = f64::NEG_INFINITY;
        for k in 0..24 {
            let x = (1u64 << k) as f64;
            let v = f(x);
            if !(v >= 0.0) || !v.is_finite() {
                return Err(bad(format!("f({x}) = {v} is not a nonnegative number")));
            }
            if v < prev - 1e-9 * prev.abs() {
                return Err(bad(format!("f decreases at {x}")));
            }
            prev = v;
        }
        if let BoundProfile::Affine { g, .. } = &self.profile {
            for m in [1.0, 2.0, 8.0, 64.0] {
                let ladder: Vec<f64> = (2..48).map(|k| g(m, (1u64 << k) as f64)).collect();
                if let Some(v) = ladder.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                    return Err(bad(format!("g({m}, .) = {v} is not a nonnegative number")));
                }
                for w in ladder[ladder.len() - 4..].windows(2) {
                    if w[0] > 0.0 && w[1] / w[0] >= 2.0 - 1e-6 {
                        return Err(bad(format!("g({m}, .) is not sublinear")));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{AckOnly, MacOracle};
    use crate::rng::seeded;

    #[test]
    fn descriptor_profiles_are_valid() {
        SchedulerDescriptor::random_access(64.0).unwrap().check_profile().unwrap();
        SchedulerDescriptor::mac_symmetric(1.0, 0.5).unwrap().check_profile().unwrap();
        SchedulerDescriptor::round_robin_withholding().check_profile().unwrap();
        SchedulerDescriptor::single_hop().check_profile().unwrap();
        let ra = SchedulerDescriptor::random_access(64.0).unwrap();
        SchedulerDescriptor::dense(&ra, 1.0, 8).unwrap().check_profile().unwrap();
    }

    #[test]
    fn linear_g_is_rejected() {
        let mut d = SchedulerDescriptor::single_hop();
        d.profile = BoundProfile::Affine {
            f: Arc::new(|_| 1.0),
            g: Arc::new(|_, n| n),
        };
        assert!(matches!(d.check_profile(), Err(Error::InvalidProfile { .. })));
    }

    #[test]
    fn dense_needs_multiplicative_base() {
        let rrw = SchedulerDescriptor::round_robin_withholding();
        assert!(matches!(
            SchedulerDescriptor::dense(&rrw, 1.0, 4),
            Err(Error::ProfileMismatch(_))
        ));
    }

    #[test]
    fn feedback_requirements() {
        let rrw = SchedulerDescriptor::round_robin_withholding();
        assert!(rrw.check_oracle(&MacOracle::new(3)).is_ok());
        assert!(matches!(
            rrw.check_oracle(&AckOnly(MacOracle::new(3))),
            Err(Error::FeedbackMismatch { .. })
        ));
    }

    #[test]
    fn one_per_link_keeps_a_single_attempt_per_link() {
        let reqs: Vec<_> = [0, 1, 0, 2, 1, 0].iter().enumerate().map(|(i, &l)| Request::new(i as u64, l)).collect();
        let mut rng = seeded(3);
        let mut counts = [0u32; 6];
        for _ in 0..3000 {
            let mut w = vec![0, 1, 2, 3, 4, 5];
            one_per_link(&mut w, &reqs, &mut rng);
            let mut links: Vec<_> = w.iter().map(|&i| reqs[i].link).collect();
            links.dedup();
            assert_eq!(links.len(), 3);
            for i in w {
                counts[i] += 1;
            }
        }
        // Link 0 has three candidates, link 1 two, link 2 one.
        for &i in &[0, 2, 5] {
            assert!((counts[i] as f64 - 1000.0).abs() < 120.0);
        }
        assert_eq!(counts[3], 3000);
    }
}
