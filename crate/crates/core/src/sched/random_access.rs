//! Random access: every pending packet transmits with probability `1/(4I)`.

use crate::error::{Error, Result};
use crate::oracle::Oracle;
use crate::rng::SimRng;
use crate::sched::{one_per_link, BernoulliClock, Recorder, Request, RunParams, ScheduleRun, StaticScheduler};

pub const DEFAULT_CAP_CONSTANT: f64 = 64.0;

#[derive(Debug, Clone, Copy)]
pub struct RandomAccess {
    pub cap_constant: f64,
}

impl RandomAccess {
    pub fn new(cap_constant: f64) -> Self {
        RandomAccess { cap_constant }
    }

    /// `ceil(c * max(I, 1) * log2(n + 1))`.
    pub fn cap(&self, interference: f64, n: f64) -> u64 {
        (self.cap_constant * interference.max(1.0) * (n.max(1.0) + 1.0).log2()).ceil() as u64
    }
}

impl Default for RandomAccess {
    fn default() -> Self {
        RandomAccess::new(DEFAULT_CAP_CONSTANT)
    }
}

impl StaticScheduler for RandomAccess {
    fn name(&self) -> &str {
        "random-access"
    }

    fn run(
        &self,
        requests: &[Request],
        params: &RunParams,
        oracle: &dyn Oracle,
        rng: &mut SimRng,
    ) -> Result<ScheduleRun> {
        if requests.is_empty() {
            return Ok(Recorder::new(0, params.record_log).finish(0));
        }
        let i = params.interference;
        if !(i > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "random access needs a positive interference bound, got {i}"
            )));
        }
        let limit = params.limit(self.cap(i, params.n));
        let mut rec = Recorder::new(requests.len(), params.record_log);
        let p = 1.0 / (4.0 * i.max(1.0));
        let mut clock = BernoulliClock::new(p, 0, 0..requests.len(), rng);
        let mut winners = Vec::new();
        let mut fired = Vec::new();
        while let Some(slot) = clock.peek() {
            if slot >= limit {
                break;
            }
            clock.pop_at(slot, &mut fired);
            winners.clone_from(&fired);
            one_per_link(&mut winners, requests, rng);
            let ok = rec.transmit(slot, &winners, requests, oracle)?;
            for &f in &fired {
                if !rec.is_served(f) {
                    clock.rearm(f, slot, rng);
                }
            }
            debug_assert_eq!(ok.len(), winners.len());
            if rec.remaining() == 0 {
                break;
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

/// Runs random access with cap constant `c` on `requests` under bound `I`.
pub fn run_random_access(
    requests: &[Request],
    interference: f64,
    oracle: &dyn Oracle,
    rng: &mut SimRng,
    c: f64,
) -> Result<ScheduleRun> {
    let params = RunParams::new(interference, requests.len() as f64);
    RandomAccess::new(c).run(requests, &params, oracle, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_w_conflict, ConflictGraph};
    use crate::model::{interference_measure, request_vector_from_links, InterferenceMatrix};
    use crate::oracle::{ConflictOracle, EdgeCapacityOracle};
    use crate::rng::seeded;
    use crate::sched::validate_schedule;

    #[test]
    fn empty_run_uses_no_slots() {
        let run = run_random_access(&[], 0.0, &EdgeCapacityOracle::new(1), &mut seeded(1), 64.0).unwrap();
        assert_eq!(run.slots_used, 0);
    }

    #[test]
    fn rejects_nonpositive_bound() {
        let r = [Request::new(0, 0)];
        assert!(run_random_access(&r, 0.0, &EdgeCapacityOracle::new(1), &mut seeded(1), 64.0).is_err());
    }

    #[test]
    fn single_request_takes_about_four_i_slots() {
        let o = EdgeCapacityOracle::new(1);
        let r = [Request::new(0, 0)];
        let mut rng = seeded(7);
        let trials = 4000;
        let mut total = 0u64;
        for _ in 0..trials {
            let run = run_random_access(&r, 3.0, &o, &mut rng, 64.0).unwrap();
            assert!(run.all_served());
            total += run.slots_used;
        }
        // Geometric with p = 1/12: mean 12, sd about 11.5.
        let mean = total as f64 / trials as f64;
        assert!((mean - 12.0).abs() < 3.0 * 11.5 / (trials as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn path_conflict_graph_completes_whp() {
        let cg = ConflictGraph::new(10, &(0..9).map(|i| (i, i + 1)).collect::<Vec<_>>()).unwrap();
        let w: InterferenceMatrix<f64> = build_w_conflict(&cg);
        let o = ConflictOracle::new(cg);
        let reqs: Vec<_> = (0..10).map(|i| Request::new(i, i as usize)).collect();
        let r = request_vector_from_links(10, reqs.iter().map(|q| q.link)).unwrap();
        let i = interference_measure(&w, &r).unwrap();
        let mut rng = seeded(11);
        let mut complete = 0;
        for _ in 0..200 {
            let params = RunParams::new(i, 10.0).logged();
            let run = RandomAccess::default().run(&reqs, &params, &o, &mut rng).unwrap();
            assert!(validate_schedule(&run, &reqs, &o).is_ok());
            complete += run.all_served() as u32;
        }
        assert!(complete as f64 >= 200.0 * 0.9);
    }

    #[test]
    fn budget_is_a_hard_cap() {
        let o = EdgeCapacityOracle::new(1);
        let reqs: Vec<_> = (0..50).map(|i| Request::new(i, 0)).collect();
        let params = RunParams::new(50.0, 50.0).with_budget(10);
        let run = RandomAccess::default().run(&reqs, &params, &o, &mut seeded(2)).unwrap();
        assert_eq!(run.slots_used, 10);
        assert!(run.served.len() <= 10);
    }
}
