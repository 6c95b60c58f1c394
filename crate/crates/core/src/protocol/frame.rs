//! Frame sizing and the random-delay wrapper for adversarial injections.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::sched::SchedulerDescriptor;

/// Largest frame length the search will consider.
pub const FRAME_SEARCH_LIMIT: u64 = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub epsilon: f64,
    /// Network size `m`.
    pub m: usize,
    /// `f(m)` of the scheduler.
    pub f_m: f64,
    /// Design injection rate `(1 - eps) / f(m)`.
    pub lambda: f64,
    /// Frame length in slots.
    pub t: u64,
    /// Design per-frame load `(1 + eps) lambda T`.
    pub j: f64,
    /// Phase 1 length `ceil(f(m) J + g(m, m J))`.
    pub tprime: u64,
    /// Clean-up length `ceil(f(m) + g(m, m J))`.
    pub cleanup: u64,
    /// Set when `t` was given explicitly instead of derived.
    pub out_of_theory: bool,
}

impl FrameConfig {
    /// Scheduler size parameter `n = m J` used in both phases.
    pub fn n(&self) -> f64 {
        self.m as f64 * self.j
    }

    /// Tail bound base `1 - 1/(m^2 J)`.
    pub fn tail_base(&self) -> f64 {
        1.0 - 1.0 / ((self.m * self.m) as f64 * self.j)
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1/2], got {epsilon}"
        )));
    }
    Ok(())
}

fn derive(epsilon: f64, scheduler: &SchedulerDescriptor, m: usize, t: u64, out_of_theory: bool) -> Result<FrameConfig> {
    let (f, g) = scheduler.affine()?;
    let mf = m as f64;
    let f_m = f(mf);
    let lambda = (1.0 - epsilon) / f_m;
    let j = (1.0 + epsilon) * lambda * t as f64;
    let g_mj = g(mf, mf * j);
    let tprime = (f_m * j + g_mj).ceil() as u64;
    let cleanup = (f_m + g_mj).ceil() as u64;
    if tprime + cleanup > t {
        return Err(Error::PhasesDoNotFit {
            phase1: tprime,
            cleanup,
            frame: t,
        });
    }
    Ok(FrameConfig {
        epsilon,
        m,
        f_m,
        lambda,
        t,
        j,
        tprime,
        cleanup,
        out_of_theory,
    })
}

/// Smallest `T` with `T >= 100 f/eps^3 + 48 f ln m / eps^2` and
/// `T >= (4 f / eps^2) g(m, (m / f) T)`.
pub fn compute_frame_params(epsilon: f64, scheduler: &SchedulerDescriptor, m: usize) -> Result<FrameConfig> {
    check_epsilon(epsilon)?;
    if m == 0 {
        return Err(Error::InvalidParameter("network size must be positive".into()));
    }
    let (f, g) = scheduler.affine()?;
    let mf = m as f64;
    let f_m = f(mf);
    if !(f_m > 0.0) {
        return Err(Error::InvalidProfile {
            scheduler: scheduler.name.clone(),
            reason: format!("f(m) = {f_m} must be positive"),
        });
    }
    let e2 = epsilon * epsilon;
    let first = 100.0 * f_m / (e2 * epsilon) + 48.0 * f_m * mf.ln() / e2;
    let ok = |t: u64| {
        let t = t as f64;
        t >= first && t >= 4.0 * f_m / e2 * g(mf, mf / f_m * t)
    };
    let mut hi = (first.ceil() as u64).max(1);
    let mut lo = hi;
    while !ok(hi) {
        lo = hi + 1;
        hi = hi.saturating_mul(2);
        if hi > FRAME_SEARCH_LIMIT {
            return Err(Error::FrameSearchExhausted {
                limit: FRAME_SEARCH_LIMIT,
            });
        }
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    derive(epsilon, scheduler, m, hi, false)
}

/// Frame parameters for an explicit frame length, flagged out-of-theory.
pub fn frame_params_with_t(epsilon: f64, scheduler: &SchedulerDescriptor, m: usize, t: u64) -> Result<FrameConfig> {
    check_epsilon(epsilon)?;
    derive(epsilon, scheduler, m, t, true)
}

/// Smallest frame length at which both phases fit, for use as an
/// out-of-theory override when the proven `T` is impractically large.
pub fn min_fitting_frame_len(epsilon: f64, scheduler: &SchedulerDescriptor, m: usize) -> Result<u64> {
    check_epsilon(epsilon)?;
    let fits = |t: u64| derive(epsilon, scheduler, m, t, true).is_ok();
    let mut hi = 1u64;
    while !fits(hi) {
        hi *= 2;
        if hi > FRAME_SEARCH_LIMIT {
            return Err(Error::FrameSearchExhausted {
                limit: FRAME_SEARCH_LIMIT,
            });
        }
    }
    let mut lo = hi / 2 + 1;
    // Fitting is monotone once reached, so bisect the last doubling step.
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(hi)
}

/// Random extra waiting of adversarially injected packets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayWrapperConfig {
    /// Delays are uniform in `0..delta_max` frames.
    pub delta_max: u64,
    /// `(1 - eps/2) / f(m)`.
    pub lambda_prime: f64,
}

impl DelayWrapperConfig {
    /// `delta_max = ceil(2 (D + w) / eps)`.
    pub fn new(max_path_len: usize, window: u64, epsilon: f64, f_m: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if window == 0 || max_path_len == 0 {
            return Err(Error::InvalidParameter("window and path length must be positive".into()));
        }
        if !(f_m > 0.0) {
            return Err(Error::InvalidParameter(format!("f(m) = {f_m} must be positive")));
        }
        let delta_max = ((2.0 * (max_path_len as f64 + window as f64)) / epsilon).ceil() as u64;
        Ok(DelayWrapperConfig {
            delta_max: delta_max.max(1),
            lambda_prime: (1.0 - epsilon / 2.0) / f_m,
        })
    }

    pub fn draw_delay(&self, rng: &mut SimRng) -> u64 {
        rng.random_range(0..self.delta_max)
    }
}

/// Frame config at `eps / 2` plus the delay wrapper for an adversary with
/// window `w` on paths of length at most `D`.
pub fn adversarial_params(
    epsilon: f64,
    scheduler: &SchedulerDescriptor,
    m: usize,
    max_path_len: usize,
    window: u64,
    override_t: Option<u64>,
) -> Result<(FrameConfig, DelayWrapperConfig)> {
    check_epsilon(epsilon)?;
    let frame = match override_t {
        Some(t) => frame_params_with_t(epsilon / 2.0, scheduler, m, t)?,
        None => compute_frame_params(epsilon / 2.0, scheduler, m)?,
    };
    let wrapper = DelayWrapperConfig::new(max_path_len, window, epsilon, frame.f_m)?;
    Ok((frame, wrapper))
}
