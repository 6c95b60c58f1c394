//! Every link with queued packets sends its oldest one each slot.

use crate::error::Result;
use crate::oracle::Oracle;
use crate::rng::SimRng;
use crate::sched::{Recorder, Request, RunParams, ScheduleRun, StaticScheduler};

#[derive(Debug, Clone, Copy, Default)]
pub struct SingleHop;

impl StaticScheduler for SingleHop {
    fn name(&self) -> &str {
        "single-hop"
    }

    fn run(
        &self,
        requests: &[Request],
        params: &RunParams,
        oracle: &dyn Oracle,
        _rng: &mut SimRng,
    ) -> Result<ScheduleRun> {
        let mut rec = Recorder::new(requests.len(), params.record_log);
        if requests.is_empty() {
            return Ok(rec.finish(0));
        }
        let links = requests.iter().map(|r| r.link.0).max().unwrap_or(0) + 1;
        let mut queues = vec![std::collections::VecDeque::new(); links];
        for (i, r) in requests.iter().enumerate() {
            queues[r.link.0].push_back(i);
        }
        let limit = params.limit(params.interference.max(0.0).ceil() as u64);
        let mut heads = Vec::new();
        let mut slot = 0;
        while slot < limit && rec.remaining() > 0 {
            heads.clear();
            heads.extend(queues.iter().filter_map(|q| q.front().copied()));
            let ok = rec.transmit(slot, &heads, requests, oracle)?;
            for (&i, &s) in heads.iter().zip(&ok) {
                if s {
                    queues[requests[i].link.0].pop_front();
                }
            }
            slot += 1;
        }
        let used = if rec.remaining() == 0 {
            rec.last_success().map_or(0, |s| s + 1)
        } else {
            limit
        };
        Ok(rec.finish(used))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::EdgeCapacityOracle;
    use crate::rng::seeded;
    use crate::sched::validate_schedule;

    #[test]
    fn routing_needs_max_congestion_slots() {
        let reqs: Vec<_> = [0, 1, 1, 2, 1].iter().enumerate().map(|(i, &l)| Request::new(i as u64, l)).collect();
        let o = EdgeCapacityOracle::new(3);
        let p = RunParams::new(3.0, 5.0).logged();
        let run = SingleHop.run(&reqs, &p, &o, &mut seeded(0)).unwrap();
        assert_eq!(run.slots_used, 3);
        assert!(run.all_served());
        assert!(validate_schedule(&run, &reqs, &o).is_ok());
        let short = SingleHop.run(&reqs, &p.with_budget(1), &o, &mut seeded(0)).unwrap();
        assert_eq!((short.slots_used, short.served.len()), (1, 3));
    }
}
