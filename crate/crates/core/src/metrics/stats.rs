//! Estimators over completed logs.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::metrics::log::{LatencyAcc, MetricsLog};

pub const DEFAULT_BURN_IN: f64 = 0.2;
pub const MIN_STABILITY_FRAMES: usize = 1000;
pub const STABILITY_BATCHES: usize = 20;

/// Two-sided 95% Student-t quantile.
pub fn t_quantile_95(df: f64) -> f64 {
    // The t inverse loses accuracy for huge df; the normal limit is exact there.
    if df > 1e5 {
        return Normal::standard().inverse_cdf(0.975);
    }
    StudentsT::new(0.0, 1.0, df)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

/// Least-squares slope and intercept of `ys` against `xs`.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityEstimate {
    /// Least-squares backlog slope in packets per frame.
    pub slope: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Frames used after burn-in.
    pub frames: usize,
    pub batches: usize,
}

impl StabilityEstimate {
    pub fn ci_contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }
}

/// Backlog slope after discarding the first `burn_in` fraction of frames.
///
/// The standard error comes from regressing the means of 20 consecutive
/// batches on the batch centres, which absorbs the serial correlation of the
/// backlog within each batch.
pub fn stability_estimate(series: &[f64], burn_in: f64) -> Result<StabilityEstimate> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::InvalidParameter(format!("burn-in fraction {burn_in} not in [0, 1)")));
    }
    let skip = (series.len() as f64 * burn_in).floor() as usize;
    let ys = &series[skip..];
    if ys.len() < MIN_STABILITY_FRAMES {
        return Err(Error::InsufficientData(format!(
            "{} frames after burn-in, need at least {MIN_STABILITY_FRAMES}",
            ys.len()
        )));
    }
    let xs: Vec<f64> = (skip..series.len()).map(|i| i as f64).collect();
    let (slope, _) = ols(&xs, ys);

    let b = STABILITY_BATCHES;
    let size = ys.len() / b;
    let mut centres = Vec::with_capacity(b);
    let mut means = Vec::with_capacity(b);
    for k in 0..b {
        let lo = k * size;
        let hi = if k + 1 == b { ys.len() } else { lo + size };
        centres.push(xs[lo..hi].iter().sum::<f64>() / (hi - lo) as f64);
        means.push(ys[lo..hi].iter().sum::<f64>() / (hi - lo) as f64);
    }
    let (bs, bi) = ols(&centres, &means);
    let mc = centres.iter().sum::<f64>() / b as f64;
    let sxx: f64 = centres.iter().map(|c| (c - mc) * (c - mc)).sum();
    let rss: f64 = centres
        .iter()
        .zip(&means)
        .map(|(c, m)| {
            let r = m - (bi + bs * c);
            r * r
        })
        .sum();
    let df = (b - 2) as f64;
    let std_error = (rss / df / sxx).sqrt();
    let half = t_quantile_95(df) * std_error;
    Ok(StabilityEstimate {
        slope,
        std_error,
        ci_low: slope - half,
        ci_high: slope + half,
        frames: ys.len(),
        batches: b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyGroup {
    pub d: usize,
    pub count: u64,
    pub mean: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub frame_len: u64,
    pub groups: Vec<LatencyGroup>,
    /// Through-origin fit of latency against `d * T`; needs two distinct `d`.
    pub slope: Option<f64>,
    pub slope_std_error: Option<f64>,
}

impl LatencySummary {
    pub fn group(&self, d: usize) -> Option<&LatencyGroup> {
        self.groups.iter().find(|g| g.d == d)
    }

    /// Delivery-weighted mean latency over all path lengths.
    pub fn overall_mean(&self) -> f64 {
        let n: u64 = self.groups.iter().map(|g| g.count).sum();
        self.groups.iter().map(|g| g.mean * g.count as f64).sum::<f64>() / n as f64
    }
}

/// Pools the latency accumulators of several logs with the same frame length.
pub fn pooled_latency(logs: &[&MetricsLog]) -> std::collections::BTreeMap<usize, LatencyAcc> {
    let mut out = std::collections::BTreeMap::new();
    for log in logs {
        for (&d, acc) in &log.latency {
            out.entry(d).or_insert_with(LatencyAcc::default).merge(acc);
        }
    }
    out
}

pub fn latency_summary(log: &MetricsLog, frame_len: u64) -> Result<LatencySummary> {
    latency_summary_from(&log.latency, frame_len)
}

pub fn latency_summary_from(
    groups: &std::collections::BTreeMap<usize, LatencyAcc>,
    frame_len: u64,
) -> Result<LatencySummary> {
    if frame_len == 0 {
        return Err(Error::InvalidParameter("frame length must be positive".into()));
    }
    let groups: Vec<LatencyGroup> = groups
        .iter()
        .filter(|(_, a)| a.count > 0)
        .map(|(&d, a)| {
            let se = (a.variance() / a.count as f64).sqrt();
            let q = if a.count > 1 { t_quantile_95((a.count - 1) as f64) } else { 0.0 };
            LatencyGroup {
                d,
                count: a.count,
                mean: a.mean(),
                std_error: se,
                ci_low: a.mean() - q * se,
                ci_high: a.mean() + q * se,
            }
        })
        .collect();
    if groups.is_empty() {
        return Err(Error::InsufficientData("no delivered packets".into()));
    }
    let (slope, slope_std_error) = if groups.len() >= 2 {
        // Per-packet least squares through the origin in units of d*T,
        // expressed with the group sums.
        let t = frame_len as f64;
        let sdd: f64 = groups.iter().map(|g| g.count as f64 * (g.d * g.d) as f64).sum();
        let sdy: f64 = groups.iter().map(|g| g.d as f64 * g.mean * g.count as f64 / t).sum();
        let a = sdy / sdd;
        // Standard error from the group means (each weighted by its count).
        let var: f64 = groups
            .iter()
            .map(|g| (g.d * g.d) as f64 * g.count as f64 * g.count as f64 * (g.std_error / t).powi(2))
            .sum();
        (Some(a), Some(var.sqrt() / sdd))
    } else {
        (None, None)
    };
    Ok(LatencySummary {
        frame_len,
        groups,
        slope,
        slope_std_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub k: u64,
    pub empirical: f64,
    pub std_error: f64,
    pub bound: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialTail {
    pub frames: usize,
    pub base: f64,
    pub rows: Vec<TailRow>,
}

impl PotentialTail {
    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }
}

/// `0, 1, 2, 4, ...` up to and including the first power of two `>= max`.
pub fn geometric_grid(max: u64) -> Vec<u64> {
    let mut out = vec![0, 1];
    let mut k = 1u64;
    while k < max {
        k *= 2;
        out.push(k);
    }
    out
}

/// Empirical `Pr[potential >= k]` over the pooled frames, against the
/// geometric bound `base^k`. A row is flagged when the estimate exceeds the
/// bound by more than three binomial standard errors.
pub fn potential_tail(potentials: &[u64], base: f64, ks: &[u64]) -> PotentialTail {
    let n = potentials.len();
    let mut sorted = potentials.to_vec();
    sorted.sort_unstable();
    let rows = ks
        .iter()
        .map(|&k| {
            let at_least = n - sorted.partition_point(|&p| p < k);
            let p = if n == 0 { 0.0 } else { at_least as f64 / n as f64 };
            let se = if n == 0 { 0.0 } else { (p * (1.0 - p) / n as f64).sqrt() };
            let bound = base.powf(k as f64);
            TailRow {
                k,
                empirical: p,
                std_error: se,
                bound,
                flagged: p > bound + 3.0 * se,
            }
        })
        .collect();
    PotentialTail { frames: n, base, rows }
}

/// Pools the potential series of several logs.
pub fn potential_tail_logs(logs: &[&MetricsLog], base: f64, ks: &[u64]) -> PotentialTail {
    let all: Vec<u64> = logs.iter().flat_map(|l| l.frames.iter().map(|r| r.potential)).collect();
    potential_tail(&all, base, ks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::log::FrameRow;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn zero_series_has_zero_slope() {
        let e = stability_estimate(&vec![0.0; 2000], DEFAULT_BURN_IN).unwrap();
        assert_eq!(e.slope, 0.0);
        assert_eq!(e.std_error, 0.0);
        assert!(e.ci_contains(0.0));
    }

    #[test]
    fn short_series_rejected() {
        assert!(matches!(
            stability_estimate(&vec![0.0; 1200], 0.2),
            Err(Error::InsufficientData(_))
        ));
        assert!(stability_estimate(&vec![0.0; 1250], 0.2).is_ok());
    }

    #[test]
    fn t_quantile_reference() {
        // Tabulated t_{0.975} values.
        assert!((t_quantile_95(18.0) - 2.100922).abs() < 1e-5);
        assert!((t_quantile_95(1e6) - 1.959966).abs() < 1e-4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn planted_slope_is_exact(k in -5.0f64..5.0, c in -100.0f64..100.0, len in 1250usize..3000) {
            let s: Vec<f64> = (0..len).map(|i| c + k * i as f64).collect();
            let e = stability_estimate(&s, DEFAULT_BURN_IN).unwrap();
            prop_assert!((e.slope - k).abs() <= 1e-9 * (1.0 + k.abs()));
            prop_assert!(e.std_error <= 1e-6);
        }

        #[test]
        fn noisy_slope_within_ci(k in -0.5f64..0.5, seed in any::<u64>()) {
            let mut rng = crate::rng::seeded(seed);
            let s: Vec<f64> = (0..4000).map(|i| 10.0 + k * i as f64 + rng.random_range(-5.0..5.0)).collect();
            let e = stability_estimate(&s, DEFAULT_BURN_IN).unwrap();
            // 6 SE keeps the 32-case property essentially deterministic.
            prop_assert!((e.slope - k).abs() <= 6.0 * e.std_error.max(1e-3));
        }
    }

    #[test]
    fn latency_groups_match_direct_averages() {
        let mut log = MetricsLog {
            packets: Some(Vec::new()),
            ..Default::default()
        };
        let mut rng = crate::rng::seeded(3);
        let mut direct: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
        for _ in 0..500 {
            let d = rng.random_range(1..=4usize);
            let lat = rng.random_range(0..1000u64) as f64;
            log.latency.entry(d).or_default().push(lat);
            direct.entry(d).or_default().push(lat);
        }
        let s = latency_summary(&log, 100).unwrap();
        for (d, xs) in direct {
            let g = s.group(d).unwrap();
            assert_eq!(g.count as usize, xs.len());
            assert!((g.mean - xs.iter().sum::<f64>() / xs.len() as f64).abs() < 1e-9);
        }
        assert!(s.slope.is_some());
    }

    #[test]
    fn latency_fit_recovers_proportional_means() {
        let mut log = MetricsLog::default();
        for d in 1..=4usize {
            for _ in 0..10 {
                log.latency.entry(d).or_default().push(2.5 * d as f64 * 40.0);
            }
        }
        let s = latency_summary(&log, 40).unwrap();
        assert!((s.slope.unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn latency_needs_deliveries() {
        assert!(matches!(
            latency_summary(&MetricsLog::default(), 10),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn zero_potential_tail() {
        let t = potential_tail(&vec![0; 1000], 0.99, &geometric_grid(16));
        assert_eq!(t.rows[0].k, 0);
        assert_eq!(t.rows[0].empirical, 1.0);
        assert_eq!(t.rows[0].bound, 1.0);
        assert!(t.rows[1..].iter().all(|r| r.empirical == 0.0));
        assert!(!t.any_flagged());
    }

    #[test]
    fn tail_flags_excess() {
        let t = potential_tail(&vec![50; 1000], 0.5, &[1, 4]);
        assert!(t.any_flagged());
    }

    #[test]
    fn tail_over_logs_pools_frames() {
        let row = |p| FrameRow {
            frame: 0,
            backlog: 0,
            failed_backlog: 0,
            potential: p,
            injections: 0,
            deliveries: 0,
            cleanup_successes: 0,
        };
        let a = MetricsLog {
            frames: vec![row(0), row(2)],
            ..Default::default()
        };
        let b = MetricsLog {
            frames: vec![row(1), row(3)],
            ..Default::default()
        };
        let t = potential_tail_logs(&[&a, &b], 0.9, &[2]);
        assert_eq!(t.frames, 4);
        assert_eq!(t.rows[0].empirical, 0.5);
    }
}
