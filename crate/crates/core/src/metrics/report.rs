//! Experiment reports: estimates plus one verdict per criterion.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::metrics::stats::{t_quantile_95, StabilityEstimate, STABILITY_BATCHES};

/// Decimal rendering with at most nine significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = 8 - mag;
    if decimals <= 0 {
        let scale = 10f64.powi(-decimals);
        return format!("{:.0}", (x / scale).round() * scale);
    }
    let s = format!("{:.*}", decimals.min(40) as usize, x);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
    pub sample_size: u64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    pub fn from_stability(name: impl Into<String>, e: &StabilityEstimate) -> Self {
        Estimate {
            name: name.into(),
            value: e.slope,
            std_error: e.std_error,
            sample_size: e.frames as u64,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
        }
    }

    /// Normal-approximation interval for a proportion.
    pub fn proportion(name: impl Into<String>, successes: u64, trials: u64) -> Self {
        let p = successes as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        Estimate {
            name: name.into(),
            value: p,
            std_error: se,
            sample_size: trials,
            ci_low: p - 1.96 * se,
            ci_high: p + 1.96 * se,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Human readable statement of the bound checked.
    pub bound: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub out_of_theory: bool,
    pub estimates: Vec<Estimate>,
    pub verdicts: Vec<Verdict>,
}

impl ExperimentReport {
    pub fn new(scenario: impl Into<String>, seeds: &[u64]) -> Self {
        ExperimentReport {
            scenario: scenario.into(),
            seeds: seeds.to_vec(),
            out_of_theory: false,
            estimates: Vec::new(),
            verdicts: Vec::new(),
        }
    }

    pub fn estimate(&mut self, e: Estimate) -> &Estimate {
        self.estimates.push(e);
        self.estimates.last().expect("just pushed")
    }

    pub fn verdict(&mut self, criterion: impl Into<String>, e: &Estimate, bound: impl Into<String>, passed: bool) {
        self.verdicts.push(Verdict {
            criterion: criterion.into(),
            estimate: e.value,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            bound: bound.into(),
            passed,
        });
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn find(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    /// Tab-separated table: one row per criterion.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "# scenario {}", self.scenario);
        let _ = writeln!(s, "# seeds {}", seeds.join(","));
        if self.out_of_theory {
            let _ = writeln!(s, "# out-of-theory frame length");
        }
        let _ = writeln!(s, "# estimate\tvalue\tstd_error\tn\tci_low\tci_high");
        for e in &self.estimates {
            let _ = writeln!(
                s,
                "# {}\t{}\t{}\t{}\t{}\t{}",
                e.name,
                fmt_sig(e.value),
                fmt_sig(e.std_error),
                e.sample_size,
                fmt_sig(e.ci_low),
                fmt_sig(e.ci_high)
            );
        }
        let _ = writeln!(s, "criterion\testimate\tci\tbound\tverdict");
        for v in &self.verdicts {
            let _ = writeln!(
                s,
                "{}\t{}\t[{}, {}]\t{}\t{}",
                v.criterion,
                fmt_sig(v.estimate),
                fmt_sig(v.ci_low),
                fmt_sig(v.ci_high),
                v.bound,
                if v.passed { "PASS" } else { "FAIL" }
            );
        }
        s
    }
}

/// Mean of per-seed slopes with the pooled batch-means standard error.
pub fn combine_stability(estimates: &[StabilityEstimate]) -> StabilityEstimate {
    let k = estimates.len() as f64;
    let slope = estimates.iter().map(|e| e.slope).sum::<f64>() / k;
    let se = estimates.iter().map(|e| e.std_error * e.std_error).sum::<f64>().sqrt() / k;
    let half = t_quantile_95((STABILITY_BATCHES - 2) as f64) * se;
    StabilityEstimate {
        slope,
        std_error: se,
        ci_low: slope - half,
        ci_high: slope + half,
        frames: estimates.iter().map(|e| e.frames).sum(),
        batches: estimates.iter().map(|e| e.batches).sum(),
    }
}
