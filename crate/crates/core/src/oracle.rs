//! Per-slot ground truth: which simultaneous transmissions succeed.

use serde::{Deserialize, Serialize};

use crate::builders::{ConflictGraph, SinrInstance};
use crate::error::{Error, Result};
use crate::model::LinkId;
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelState {
    Silence,
    Success,
    Collision,
}

impl ChannelState {
    pub fn of_count(attempts: usize) -> Self {
        match attempts {
            0 => ChannelState::Silence,
            1 => ChannelState::Success,
            _ => ChannelState::Collision,
        }
    }
}

/// Outcome of one slot; `success[i]` belongs to the `i`-th attempt.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SlotFeedback {
    pub success: Vec<bool>,
    pub channel: Option<ChannelState>,
}

pub trait Oracle: Send + Sync {
    fn name(&self) -> &str;

    fn link_count(&self) -> usize;

    /// Whether feedback carries silence / success / collision.
    fn provides_channel_state(&self) -> bool {
        false
    }

    /// Evaluates one slot. Rejects unknown or repeated links.
    fn evaluate(&self, attempts: &[LinkId]) -> Result<SlotFeedback>;
}

fn check_attempts(attempts: &[LinkId], links: usize) -> Result<()> {
    if let Some(&l) = attempts.iter().find(|l| l.0 >= links) {
        return Err(Error::UnknownLink(l));
    }
    if attempts.len() > 1 {
        let mut sorted = attempts.to_vec();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateAttempt(w[0]));
        }
    }
    Ok(())
}

/// Success iff `p/d^a >= beta * (interference + nu)` up to 1e-12.
#[derive(Debug, Clone)]
pub struct SinrOracle<S = f64> {
    inst: SinrInstance<S>,
}

impl<S: Real> SinrOracle<S> {
    pub fn new(inst: SinrInstance<S>) -> Self {
        SinrOracle { inst }
    }

    pub fn instance(&self) -> &SinrInstance<S> {
        &self.inst
    }
}

impl<S: Real> Oracle for SinrOracle<S> {
    fn name(&self) -> &str {
        "sinr"
    }

    fn link_count(&self) -> usize {
        self.inst.link_count()
    }

    fn evaluate(&self, attempts: &[LinkId]) -> Result<SlotFeedback> {
        check_attempts(attempts, self.link_count())?;
        let p = &self.inst.params;
        let tol: S = lit(1e-12);
        let success = attempts
            .iter()
            .map(|&l| {
                let interference = attempts
                    .iter()
                    .filter(|&&o| o != l)
                    .fold(S::zero(), |acc, &o| acc + self.inst.received(o.0, l.0));
                self.inst.received(l.0, l.0) - p.beta * (interference + p.nu) >= -tol
            })
            .collect();
        Ok(SlotFeedback {
            success,
            channel: None,
        })
    }
}

/// Success iff no conflicting link transmits in the same slot.
#[derive(Debug, Clone)]
pub struct ConflictOracle {
    cg: ConflictGraph,
}

impl ConflictOracle {
    pub fn new(cg: ConflictGraph) -> Self {
        ConflictOracle { cg }
    }

    pub fn graph(&self) -> &ConflictGraph {
        &self.cg
    }
}

impl Oracle for ConflictOracle {
    fn name(&self) -> &str {
        "conflict"
    }

    fn link_count(&self) -> usize {
        self.cg.len()
    }

    fn evaluate(&self, attempts: &[LinkId]) -> Result<SlotFeedback> {
        check_attempts(attempts, self.link_count())?;
        let success = attempts
            .iter()
            .map(|&l| !attempts.iter().any(|&o| o != l && self.cg.conflicts(l.0, o.0)))
            .collect();
        Ok(SlotFeedback {
            success,
            channel: None,
        })
    }
}

/// Single shared channel: exactly one transmission succeeds.
#[derive(Debug, Clone)]
pub struct MacOracle {
    links: usize,
}

impl MacOracle {
    pub fn new(links: usize) -> Self {
        MacOracle { links }
    }
}

impl Oracle for MacOracle {
    fn name(&self) -> &str {
        "mac"
    }

    fn link_count(&self) -> usize {
        self.links
    }

    fn provides_channel_state(&self) -> bool {
        true
    }

    fn evaluate(&self, attempts: &[LinkId]) -> Result<SlotFeedback> {
        check_attempts(attempts, self.links)?;
        Ok(SlotFeedback {
            success: vec![attempts.len() == 1; attempts.len()],
            channel: Some(ChannelState::of_count(attempts.len())),
        })
    }
}

/// Packet routing: every link carries one packet per slot.
#[derive(Debug, Clone)]
pub struct EdgeCapacityOracle {
    links: usize,
}

impl EdgeCapacityOracle {
    pub fn new(links: usize) -> Self {
        EdgeCapacityOracle { links }
    }
}

impl Oracle for EdgeCapacityOracle {
    fn name(&self) -> &str {
        "edge-capacity"
    }

    fn link_count(&self) -> usize {
        self.links
    }

    fn evaluate(&self, attempts: &[LinkId]) -> Result<SlotFeedback> {
        check_attempts(attempts, self.links)?;
        Ok(SlotFeedback {
            success: vec![true; attempts.len()],
            channel: None,
        })
    }
}

/// Hides channel state so that only acknowledgements reach the scheduler.
#[derive(Debug, Clone)]
pub struct AckOnly<O>(pub O);

impl<O: Oracle> Oracle for AckOnly<O> {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn link_count(&self) -> usize {
        self.0.link_count()
    }

    fn evaluate(&self, attempts: &[LinkId]) -> Result<SlotFeedback> {
        let mut fb = self.0.evaluate(attempts)?;
        fb.channel = None;
        Ok(fb)
    }
}

impl<O: Oracle + ?Sized> Oracle for Box<O> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn link_count(&self) -> usize {
        (**self).link_count()
    }

    fn provides_channel_state(&self) -> bool {
        (**self).provides_channel_state()
    }

    fn evaluate(&self, attempts: &[LinkId]) -> Result<SlotFeedback> {
        (**self).evaluate(attempts)
    }
}
