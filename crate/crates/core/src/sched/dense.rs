//! Transformation of a multiplicative scheduler into one whose length does
//! not depend on the number of packets: random delays split the requests
//! into classes of interference about `chi = 6 (ln m + 9)`.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::oracle::Oracle;
use crate::rng::SimRng;
use crate::sched::{ProfileFn1, Recorder, Request, RunParams, ScheduleRun, StaticScheduler};

pub fn chi(m: f64) -> f64 {
    6.0 * (m.ln() + 9.0)
}

/// `log2 n`, clamped to 1 so that a single request still gets a final stage.
fn log_n(n: f64) -> f64 {
    n.log2().max(1.0)
}

fn class_budget(f: &ProfileFn1, m: f64) -> u64 {
    let c = chi(m);
    (f(m * c) * c).ceil() as u64
}

fn final_budget(f: &ProfileFn1, phi: f64, m: f64, n: f64) -> u64 {
    (f(n) * 2.0 * phi * chi(m) * log_n(n)).ceil() as u64
}

pub(crate) fn profile_f(f: &ProfileFn1, m: f64) -> f64 {
    2.0 * class_budget(f, m) as f64 / chi(m)
}

pub(crate) fn profile_g(f: &ProfileFn1, phi: f64, m: f64, n: f64) -> f64 {
    let b = class_budget(f, m) as f64;
    (n.max(1.0).log2().ceil() + 3.0) * b + (phi.ceil() + 1.0) * final_budget(f, phi, m, n) as f64
}

/// Deterministic slot accounting of one transformed run.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseAccounting {
    pub chi: f64,
    pub xi: u32,
    /// Number of delay classes in each halving iteration.
    pub psi: Vec<u64>,
    pub class_budget: u64,
    pub final_budget: u64,
    pub final_runs: u64,
    pub total: u64,
}

pub fn dense_accounting(f: &ProfileFn1, interference: f64, n: f64, phi: f64, m: usize) -> DenseAccounting {
    let m = m as f64;
    let c = chi(m);
    let ratio = interference / (2.0 * phi * c * log_n(n));
    let xi = if ratio > 0.0 { ratio.log2().ceil().max(0.0) as u32 } else { 0 };
    let psi: Vec<u64> = (1..=xi)
        .map(|i| (2f64.powi(1 - i as i32) * interference / c).ceil() as u64)
        .collect();
    let class_budget = class_budget(f, m);
    let final_budget = final_budget(f, phi, m, n);
    let final_runs = phi.ceil() as u64 + 1;
    let total = psi.iter().sum::<u64>() * class_budget + final_runs * final_budget;
    DenseAccounting {
        chi: c,
        xi,
        psi,
        class_budget,
        final_budget,
        final_runs,
        total,
    }
}

#[derive(Clone)]
pub struct DenseScheduler {
    base: Arc<dyn StaticScheduler>,
    f: ProfileFn1,
    phi: f64,
    m: usize,
}

impl DenseScheduler {
    pub fn new(base: Arc<dyn StaticScheduler>, f: ProfileFn1, phi: f64, m: usize) -> Result<Self> {
        if !(phi >= 1.0) {
            return Err(Error::InvalidParameter("phi must be at least 1".into()));
        }
        if m == 0 {
            return Err(Error::InvalidParameter("network size must be positive".into()));
        }
        Ok(DenseScheduler { base, f, phi, m })
    }

    pub fn accounting(&self, interference: f64, n: f64) -> DenseAccounting {
        dense_accounting(&self.f, interference, n, self.phi, self.m)
    }

    /// Runs the base on `members` and folds the result into `rec`.
    #[allow(clippy::too_many_arguments)]
    fn stage(
        &self,
        members: &[usize],
        requests: &[Request],
        params: RunParams,
        offset: u64,
        rec: &mut Recorder,
        oracle: &dyn Oracle,
        rng: &mut SimRng,
    ) -> Result<Vec<usize>> {
        let sub: Vec<Request> = members.iter().map(|&i| requests[i]).collect();
        let run = self.base.run(&sub, &params, oracle, rng)?;
        let budget = params.budget.unwrap_or(u64::MAX);
        if run.slots_used > budget {
            return Err(Error::BudgetExceeded {
                used: run.slots_used,
                budget,
            });
        }
        rec.absorb(&run, members, offset)?;
        Ok(run.unserved.iter().map(|&j| members[j]).collect())
    }
}

impl StaticScheduler for DenseScheduler {
    fn name(&self) -> &str {
        "dense"
    }

    fn run(
        &self,
        requests: &[Request],
        params: &RunParams,
        oracle: &dyn Oracle,
        rng: &mut SimRng,
    ) -> Result<ScheduleRun> {
        let n = params.n;
        if !(n > 0.0) {
            return Ok(Recorder::new(requests.len(), params.record_log).finish(0));
        }
        if !(params.interference >= 0.0) {
            return Err(Error::InvalidParameter("interference bound must be nonnegative".into()));
        }
        let acc = self.accounting(params.interference, n);
        let limit = params.limit(acc.total);
        let m = self.m as f64;
        let mut rec = Recorder::new(requests.len(), params.record_log);
        let mut remaining: Vec<usize> = (0..requests.len()).collect();
        let mut offset = 0u64;
        let mut keyed = Vec::new();

        for &psi in &acc.psi {
            keyed.clear();
            keyed.extend(remaining.iter().map(|&i| (rng.random_range(1..=psi), i)));
            keyed.sort_unstable();
            let mut carried = Vec::new();
            let mut pos = 0;
            while pos < keyed.len() {
                let delay = keyed[pos].0;
                let end = keyed[pos..].partition_point(|&(d, _)| d == delay) + pos;
                let members: Vec<usize> = keyed[pos..end].iter().map(|&(_, i)| i).collect();
                pos = end;
                let start = offset + (delay - 1) * acc.class_budget;
                if start >= limit {
                    carried.extend(members);
                    continue;
                }
                let p = RunParams {
                    interference: acc.chi,
                    n: m * acc.chi,
                    budget: Some(acc.class_budget.min(limit - start)),
                    record_log: params.record_log,
                };
                carried.extend(self.stage(&members, requests, p, start, &mut rec, oracle, rng)?);
            }
            offset += psi * acc.class_budget;
            carried.sort_unstable();
            remaining = carried;
        }

        let big = 2.0 * self.phi * acc.chi * log_n(n);
        for _ in 0..acc.final_runs {
            if !remaining.is_empty() && offset < limit {
                let p = RunParams {
                    interference: big,
                    n,
                    budget: Some(acc.final_budget.min(limit - offset)),
                    record_log: params.record_log,
                };
                remaining = self.stage(&remaining.clone(), requests, p, offset, &mut rec, oracle, rng)?;
            }
            offset += acc.final_budget;
        }
        debug_assert_eq!(offset, acc.total);
        Ok(rec.finish(limit))
    }
}
