//! The local-clock network: `m - 1` short links that never fail plus one long
//! link that fails whenever any short link transmits.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::report::{combine_stability, Estimate, ExperimentReport};
use crate::metrics::stats::{stability_estimate, StabilityEstimate, DEFAULT_BURN_IN};
use crate::model::LinkId;
use crate::oracle::{Oracle, SlotFeedback};
use crate::rng::{substream, Stream};

/// Acknowledgement-only oracle for the local-clock network. Links
/// `0..m-1` are short, link `m-1` is long.
#[derive(Debug, Clone, Copy)]
pub struct BlockedLongLinkOracle {
    m: usize,
}

impl BlockedLongLinkOracle {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter("local-clock network needs m >= 2".into()));
        }
        Ok(BlockedLongLinkOracle { m })
    }

    pub fn long_link(&self) -> LinkId {
        LinkId(self.m - 1)
    }
}

impl Oracle for BlockedLongLinkOracle {
    fn name(&self) -> &str {
        "blocked-long-link"
    }

    fn link_count(&self) -> usize {
        self.m
    }

    fn evaluate(&self, attempts: &[LinkId]) -> Result<SlotFeedback> {
        let mut seen = vec![false; self.m];
        for &l in attempts {
            let s = seen.get_mut(l.0).ok_or(Error::UnknownLink(l))?;
            if *s {
                return Err(Error::DuplicateAttempt(l));
            }
            *s = true;
        }
        let short_active = attempts.iter().any(|l| l.0 + 1 < self.m);
        let success = attempts
            .iter()
            .map(|l| l.0 + 1 < self.m || !short_active)
            .collect();
        Ok(SlotFeedback { success, channel: None })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalClockConfig {
    /// Total links, `m - 1` of them short.
    pub m: usize,
    /// Per-link arrival probability for the global-clock arm.
    pub global_rate: f64,
    /// Per-link arrival probability for the local-clock arm.
    pub local_rate: f64,
    /// Slots per recorded backlog sample.
    pub frame_slots: u64,
    pub frames: u64,
}

impl LocalClockConfig {
    /// Defaults: rate 0.4 for the global arm, `ln m / m` for the local arm.
    pub fn new(m: usize, frames: u64) -> Self {
        LocalClockConfig {
            m,
            global_rate: 0.4,
            local_rate: (m as f64).ln() / m as f64,
            frame_slots: 64,
            frames,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmOutcome {
    /// Total backlog at the end of each frame.
    pub total_backlog: Vec<f64>,
    /// Long-link backlog at the end of each frame.
    pub long_backlog: Vec<f64>,
    /// Slots in which no short link transmitted.
    pub silent_slots: u64,
    pub slots: u64,
    pub long_deliveries: u64,
}

/// Global clock: short links transmit only in even slots, the long link only
/// in odd slots.
pub fn run_global_clock(cfg: &LocalClockConfig, seed: u64) -> Result<ArmOutcome> {
    run_arm(cfg, seed, cfg.global_rate, true)
}

/// Local clock: each short link sends a packet in the slot it arrives (no
/// shared parity to align on), and the long link retries every slot while
/// backlogged.
pub fn run_local_clock(cfg: &LocalClockConfig, seed: u64) -> Result<ArmOutcome> {
    run_arm(cfg, seed, cfg.local_rate, false)
}

fn run_arm(cfg: &LocalClockConfig, seed: u64, rate: f64, global: bool) -> Result<ArmOutcome> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidParameter(format!("rate {rate} not in [0, 1]")));
    }
    let oracle = BlockedLongLinkOracle::new(cfg.m)?;
    let m = cfg.m;
    let long = m - 1;
    let mut rng = substream(seed, Stream::Trial(if global { 0 } else { 1 }));
    let mut queues = vec![0u64; m];
    let mut nonempty_short: Vec<usize> = Vec::new();
    let mut attempts = Vec::with_capacity(m);
    let mut out = ArmOutcome {
        total_backlog: Vec::with_capacity(cfg.frames as usize),
        long_backlog: Vec::with_capacity(cfg.frames as usize),
        silent_slots: 0,
        slots: 0,
        long_deliveries: 0,
    };
    let mut backlog = 0u64;
    // Short arrivals are drawn per link so that a local-clock link knows which
    // of its own packets arrived this slot.
    let mut arrivals: VecDeque<usize> = VecDeque::new();
    let per_slot = Binomial::new(m as u64 - 1, rate).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    for _ in 0..cfg.frames {
        for _ in 0..cfg.frame_slots {
            let slot = out.slots;
            out.slots += 1;
            // Which short links receive a packet: a uniform subset of the
            // binomially distributed size.
            let k = per_slot.sample(&mut rng) as usize;
            arrivals.clear();
            if k > 0 {
                let picks = rand::seq::index::sample(&mut rng, m - 1, k);
                arrivals.extend(picks.iter());
            }
            for &l in &arrivals {
                queues[l] += 1;
            }
            backlog += k as u64;
            if rng.random_bool(rate) {
                queues[long] += 1;
                backlog += 1;
            }

            attempts.clear();
            if global {
                if slot.is_multiple_of(2) {
                    nonempty_short.clear();
                    nonempty_short.extend((0..long).filter(|&l| queues[l] > 0));
                    attempts.extend(nonempty_short.iter().map(|&l| LinkId(l)));
                } else if queues[long] > 0 {
                    attempts.push(LinkId(long));
                }
            } else {
                attempts.extend((0..long).filter(|&l| queues[l] > 0).map(LinkId));
                if queues[long] > 0 {
                    attempts.push(LinkId(long));
                }
            }
            if !attempts.iter().any(|l| l.0 != long) {
                out.silent_slots += 1;
            }
            let fb = oracle.evaluate(&attempts)?;
            for (l, ok) in attempts.iter().zip(fb.success) {
                if ok {
                    queues[l.0] -= 1;
                    backlog -= 1;
                    if l.0 == long {
                        out.long_deliveries += 1;
                    }
                }
            }
        }
        out.total_backlog.push(backlog as f64);
        out.long_backlog.push(queues[long] as f64);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalClockSeedResult {
    pub global: StabilityEstimate,
    pub local: StabilityEstimate,
    pub silent_slots: u64,
    pub slots: u64,
}

pub fn local_clock_seed(cfg: &LocalClockConfig, seed: u64) -> Result<LocalClockSeedResult> {
    let g = run_global_clock(cfg, seed)?;
    let l = run_local_clock(cfg, seed)?;
    Ok(LocalClockSeedResult {
        global: stability_estimate(&g.total_backlog, DEFAULT_BURN_IN)?,
        local: stability_estimate(&l.long_backlog, DEFAULT_BURN_IN)?,
        silent_slots: l.silent_slots,
        slots: l.slots,
    })
}

/// Runs both arms for every seed and judges the three criteria.
pub fn local_clock_scenario(cfg: &LocalClockConfig, seeds: &[u64]) -> Result<ExperimentReport> {
    let per_seed = seeds
        .iter()
        .map(|&s| local_clock_seed(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    local_clock_report(cfg, seeds, &per_seed)
}

pub fn local_clock_report(
    cfg: &LocalClockConfig,
    seeds: &[u64],
    per_seed: &[LocalClockSeedResult],
) -> Result<ExperimentReport> {
    if per_seed.is_empty() {
        return Err(Error::InsufficientData("no seeds".into()));
    }
    let mut report = ExperimentReport::new(format!("local-clock m={}", cfg.m), seeds);
    let global = combine_stability(&per_seed.iter().map(|r| r.global).collect::<Vec<_>>());
    let local = combine_stability(&per_seed.iter().map(|r| r.local).collect::<Vec<_>>());
    let silent = per_seed.iter().map(|r| r.silent_slots).sum();
    let slots = per_seed.iter().map(|r| r.slots).sum();
    let expected = (1.0 - cfg.local_rate).powi(cfg.m as i32 - 1);

    let e = Estimate::from_stability("global-clock backlog slope", &global);
    report.verdict(
        format!("global clock stable at rate {}", cfg.global_rate),
        &e,
        "slope CI contains 0",
        global.ci_contains(0.0),
    );
    report.estimates.push(e);

    let e = Estimate::from_stability("local-clock long-link backlog slope", &local);
    report.verdict(
        format!("local clock unstable at rate {:.6}", cfg.local_rate),
        &e,
        "slope > 0 (CI above 0)",
        local.slope > 0.0 && local.ci_low > 0.0,
    );
    report.estimates.push(e);

    let e = Estimate::proportion("silent short-link slot fraction", silent, slots);
    let ok = (e.value - expected).abs() <= 3.0 * e.std_error;
    report.verdict(
        "silent-slot fraction",
        &e,
        format!("within 3 SE of (1-rate)^(m-1) = {}", crate::metrics::report::fmt_sig(expected)),
        ok,
    );
    report.estimates.push(e);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_blocks_long_link_only() {
        let o = BlockedLongLinkOracle::new(4).unwrap();
        let fb = o.evaluate(&[LinkId(0), LinkId(3)]).unwrap();
        assert_eq!(fb.success, vec![true, false]);
        assert_eq!(o.evaluate(&[LinkId(3)]).unwrap().success, vec![true]);
        assert_eq!(o.evaluate(&[LinkId(1), LinkId(2)]).unwrap().success, vec![true, true]);
        assert!(matches!(o.evaluate(&[LinkId(4)]), Err(Error::UnknownLink(_))));
        assert!(BlockedLongLinkOracle::new(1).is_err());
    }

    #[test]
    fn conservation_in_both_arms() {
        let cfg = LocalClockConfig::new(8, 50);
        for arm in [run_global_clock(&cfg, 3).unwrap(), run_local_clock(&cfg, 3).unwrap()] {
            assert_eq!(arm.slots, 50 * 64);
            assert!(arm.long_backlog.iter().zip(&arm.total_backlog).all(|(l, t)| l <= t));
        }
    }

    #[test]
    fn two_links_stable_under_both_clocks() {
        let mut cfg = LocalClockConfig::new(2, 1500);
        cfg.global_rate = 0.3;
        cfg.local_rate = 0.3;
        let r = local_clock_seed(&cfg, 11).unwrap();
        assert!(r.global.slope.abs() < 0.05);
        assert!(r.local.slope.abs() < 0.05);
    }

    #[test]
    fn global_clock_stable_for_several_sizes() {
        for m in [4usize, 16, 64] {
            let cfg = LocalClockConfig::new(m, 1500);
            let g = run_global_clock(&cfg, 5).unwrap();
            let e = stability_estimate(&g.total_backlog, DEFAULT_BURN_IN).unwrap();
            assert!(e.ci_contains(0.0), "m = {m}: {e:?}");
        }
    }
}
