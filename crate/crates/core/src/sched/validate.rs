//! Replays a schedule log through an oracle.

use crate::oracle::Oracle;
use crate::sched::{Request, ScheduleRun};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScheduleValidation {
    pub violations: Vec<String>,
}

impl ScheduleValidation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Ok iff every served request has exactly one successful attempt in the log,
/// at the reported slot, and the log agrees with `oracle`.
pub fn validate_schedule(run: &ScheduleRun, requests: &[Request], oracle: &dyn Oracle) -> ScheduleValidation {
    let mut v = Vec::new();
    let mut successes: Vec<Vec<u64>> = vec![Vec::new(); requests.len()];
    match &run.log {
        Some(log) => {
            for rec in log {
                if rec.slot >= run.slots_used {
                    v.push(format!("slot {} beyond reported length {}", rec.slot, run.slots_used));
                }
                let links: Vec<_> = rec.attempts.iter().map(|&(_, l)| l).collect();
                for &(i, l) in &rec.attempts {
                    if requests.get(i).map(|r| r.link) != Some(l) {
                        v.push(format!("slot {}: request {i} attempted on wrong link {l}", rec.slot));
                    }
                }
                match oracle.evaluate(&links) {
                    Ok(fb) if fb.success == rec.success => {
                        for (&(i, _), &ok) in rec.attempts.iter().zip(&fb.success) {
                            if ok && i < successes.len() {
                                successes[i].push(rec.slot);
                            }
                        }
                    }
                    Ok(_) => v.push(format!("slot {}: recorded outcomes differ from replay", rec.slot)),
                    Err(e) => v.push(format!("slot {}: {e}", rec.slot)),
                }
            }
        }
        None if !run.served.is_empty() => v.push("served requests but no slot log".into()),
        None => {}
    }
    let mut seen = vec![false; requests.len()];
    for &(i, slot) in &run.served {
        if i >= requests.len() || std::mem::replace(&mut seen[i], true) {
            v.push(format!("request {i} served twice or unknown"));
            continue;
        }
        if run.log.is_some() && successes[i] != [slot] {
            v.push(format!("request {i} has successes {:?}, reported slot {slot}", successes[i]));
        }
    }
    for &i in &run.unserved {
        if i >= requests.len() || std::mem::replace(&mut seen[i], true) {
            v.push(format!("request {i} listed twice or unknown"));
        } else if !successes[i].is_empty() {
            v.push(format!("request {i} succeeded but is reported unserved"));
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        v.push(format!("request {i} missing from the run"));
    }
    ScheduleValidation { violations: v }
}
