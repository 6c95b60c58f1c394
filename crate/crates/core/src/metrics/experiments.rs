//! Registry of named experiments. Each experiment fans out over seeds, and
//! the report is assembled sequentially once all runs are done.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builders::{build_w_identity, build_w_mac};
use crate::error::{Error, Result};
use crate::injection::{
    generate_saturating_trace, stochastic_rate, validate_window_trace, Generator, StochasticSpec, TracePattern,
};
use crate::metrics::log::MetricsLog;
use crate::metrics::report::{combine_stability, fmt_sig, Estimate, ExperimentReport};
use crate::metrics::scenarios::{local_clock_report, local_clock_seed, LocalClockConfig};
use crate::metrics::stats::{
    latency_summary_from, ols, pooled_latency, potential_tail_logs, stability_estimate, DEFAULT_BURN_IN,
};
use crate::model::{InterferenceMatrix, LinkId, NetworkInstance, Packet, PacketId, RoutePath};
use crate::oracle::{AckOnly, EdgeCapacityOracle, MacOracle, Oracle};
use crate::protocol::{
    adversarial_params, compute_frame_params, frame_params_with_t, min_fitting_frame_len, run_frame, run_simulation,
    FrameConfig, FrameRngs, InjectionSource, ProtocolState, Simulation,
};
use crate::rng::{substream, Stream};
use crate::sched::SchedulerDescriptor;

pub const EXPERIMENTS: [&str; 5] = [
    "mac-stability",
    "latency-scaling",
    "adversarial-stability",
    "cleanup-rate",
    "local-clock",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub seeds: Vec<u64>,
    /// Worker threads; 0 means one per core.
    pub jobs: usize,
    /// Overrides the experiment's default horizon in frames (or trials).
    pub frames: Option<u64>,
}

impl ExperimentOptions {
    pub fn new(seeds: Vec<u64>) -> Self {
        ExperimentOptions {
            seeds,
            jobs: 0,
            frames: None,
        }
    }
}

pub fn run_experiment(name: &str, opts: &ExperimentOptions) -> Result<ExperimentReport> {
    if opts.seeds.is_empty() {
        return Err(Error::InvalidParameter("at least one seed is required".into()));
    }
    match name {
        "mac-stability" => {
            let mut cfg = MacStabilityConfig::default();
            if let Some(f) = opts.frames {
                cfg.frames = f;
            }
            mac_stability(&cfg, opts)
        }
        "latency-scaling" => {
            let mut cfg = LatencyScalingConfig::default();
            if let Some(f) = opts.frames {
                cfg.frames = f;
            }
            latency_scaling(&cfg, opts)
        }
        "adversarial-stability" => {
            let mut cfg = AdversarialConfig::default();
            if let Some(f) = opts.frames {
                cfg.frames = f;
            }
            adversarial_stability(&cfg, opts)
        }
        "cleanup-rate" => {
            let mut cfg = CleanupRateConfig::default();
            if let Some(f) = opts.frames {
                cfg.trials = f;
            }
            cleanup_rate(&cfg, opts)
        }
        "local-clock" => {
            let cfg = LocalClockConfig::new(64, opts.frames.unwrap_or(2000));
            let per_seed = map_seeds(opts, |s| local_clock_seed(&cfg, s))?;
            local_clock_report(&cfg, &opts.seeds, &per_seed)
        }
        _ => Err(Error::InvalidParameter(format!(
            "unknown experiment {name:?}; registered: {}",
            EXPERIMENTS.join(", ")
        ))),
    }
}

/// Runs `f` for every seed on a pool of `opts.jobs` workers, in seed order.
pub fn map_seeds<T, F>(opts: &ExperimentOptions, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    pool.install(|| opts.seeds.par_iter().map(|&s| f(s)).collect())
}

/// `m` links from one hub to `m` leaves, with single-hop paths.
pub fn star_network(m: usize) -> Result<(NetworkInstance, Vec<Arc<RoutePath>>)> {
    let pairs: Vec<_> = (0..m as u64).map(|i| (0, i + 1)).collect();
    let net = NetworkInstance::from_pairs(m as u64 + 1, &pairs, 1)?;
    let paths = (0..m)
        .map(|l| RoutePath::single(&net, LinkId(l)).map(Arc::new))
        .collect::<Result<_>>()?;
    Ok((net, paths))
}

/// One generator per path, each injecting with probability `p`.
pub fn independent_generators(paths: &[Arc<RoutePath>], p: f64) -> Result<Arc<StochasticSpec>> {
    Ok(Arc::new(StochasticSpec::new(
        paths
            .iter()
            .map(|q| Generator::new(vec![(q.clone(), p)]))
            .collect::<Result<_>>()?,
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacStabilityConfig {
    pub m: usize,
    pub phi: f64,
    pub delta: f64,
    pub epsilon: f64,
    /// Injection rate as a fraction of the design rate.
    pub load: f64,
    pub frames: u64,
    /// `None` runs at the smallest frame length where both phases fit.
    pub frame_len: Option<u64>,
    pub overload_rate: f64,
    pub overload_frames: u64,
}

impl Default for MacStabilityConfig {
    fn default() -> Self {
        MacStabilityConfig {
            m: 4,
            phi: 1.0,
            delta: 50.0,
            epsilon: 0.5,
            load: 0.5,
            frames: 50_000,
            frame_len: None,
            overload_rate: 1.2,
            overload_frames: 5,
        }
    }
}

pub struct MacSetup {
    pub w: InterferenceMatrix<f64>,
    pub paths: Vec<Arc<RoutePath>>,
    pub scheduler: SchedulerDescriptor,
    pub oracle: AckOnly<MacOracle>,
    pub frame: FrameConfig,
}

pub fn mac_setup(cfg: &MacStabilityConfig) -> Result<MacSetup> {
    let (_, paths) = star_network(cfg.m)?;
    let scheduler = SchedulerDescriptor::mac_symmetric(cfg.phi, cfg.delta)?;
    let t = match cfg.frame_len {
        Some(t) => t,
        None => min_fitting_frame_len(cfg.epsilon, &scheduler, cfg.m)?,
    };
    let frame = frame_params_with_t(cfg.epsilon, &scheduler, cfg.m, t)?;
    Ok(MacSetup {
        w: build_w_mac(cfg.m),
        paths,
        scheduler,
        oracle: AckOnly(MacOracle::new(cfg.m)),
        frame,
    })
}

/// One MAC run at total rate `rate` split evenly over the links.
pub fn mac_run(setup: &MacSetup, rate: f64, frames: u64, seed: u64) -> Result<MetricsLog> {
    let spec = independent_generators(&setup.paths, rate / setup.paths.len() as f64)?;
    run_simulation(&Simulation {
        matrix: &setup.w,
        frame: setup.frame,
        scheduler: &setup.scheduler,
        oracle: &setup.oracle,
        source: InjectionSource::Stochastic(spec),
        horizon: frames,
        seed,
        record_packets: false,
    })
}

pub fn mac_stability(cfg: &MacStabilityConfig, opts: &ExperimentOptions) -> Result<ExperimentReport> {
    let setup = mac_setup(cfg)?;
    let rate = cfg.load * setup.frame.lambda;
    let logs = map_seeds(opts, |s| mac_run(&setup, rate, cfg.frames, s))?;
    let overload = mac_run(&setup, cfg.overload_rate, cfg.overload_frames, opts.seeds[0])?;

    let mut report = ExperimentReport::new("mac-stability", &opts.seeds);
    report.out_of_theory = setup.frame.out_of_theory;
    report.estimates.push(Estimate {
        name: format!("frame length T (J = {})", fmt_sig(setup.frame.j)),
        value: setup.frame.t as f64,
        std_error: 0.0,
        sample_size: 1,
        ci_low: setup.frame.t as f64,
        ci_high: setup.frame.t as f64,
    });
    let per_seed = logs
        .iter()
        .map(|l| stability_estimate(&l.backlog_series(), DEFAULT_BURN_IN))
        .collect::<Result<Vec<_>>>()?;
    let s = combine_stability(&per_seed);
    let e = Estimate::from_stability("backlog slope (packets/frame)", &s);
    report.verdict(
        format!("stable at {} x design rate", cfg.load),
        &e,
        "|slope| < 0.01 and CI contains 0",
        s.slope.abs() < 0.01 && s.ci_contains(0.0),
    );
    report.estimates.push(e);

    let xs: Vec<f64> = (0..overload.frames.len()).map(|i| i as f64).collect();
    let (slope, _) = ols(&xs, &overload.backlog_series());
    let e = Estimate {
        name: format!("overload backlog slope at rate {}", cfg.overload_rate),
        value: slope,
        std_error: 0.0,
        sample_size: overload.frames.len() as u64,
        ci_low: slope,
        ci_high: slope,
    };
    report.verdict("overload grows", &e, "slope > 0.1", slope > 0.1);
    report.estimates.push(e);

    let refs: Vec<&MetricsLog> = logs.iter().collect();
    let tail = potential_tail_logs(&refs, setup.frame.tail_base(), &[1, 2, 4, 8, 16]);
    for row in &tail.rows {
        let e = Estimate {
            name: format!("Pr[potential >= {}]", row.k),
            value: row.empirical,
            std_error: row.std_error,
            sample_size: tail.frames as u64,
            ci_low: row.empirical - 1.96 * row.std_error,
            ci_high: row.empirical + 1.96 * row.std_error,
        };
        report.verdict(
            format!("potential tail k={}", row.k),
            &e,
            format!("<= {} + 3 SE", fmt_sig(row.bound)),
            !row.flagged,
        );
        report.estimates.push(e);
    }
    if let Ok(lat) = latency_summary_from(&pooled_latency(&refs), setup.frame.t) {
        report.estimates.push(Estimate {
            name: "mean latency (frames)".into(),
            value: lat.overall_mean() / setup.frame.t as f64,
            std_error: lat.groups[0].std_error / setup.frame.t as f64,
            sample_size: lat.groups.iter().map(|g| g.count).sum(),
            ci_low: lat.groups[0].ci_low / setup.frame.t as f64,
            ci_high: lat.groups[0].ci_high / setup.frame.t as f64,
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyScalingConfig {
    /// Links on the line; paths of every length `1..=hops` start at link 0.
    pub hops: usize,
    pub epsilon: f64,
    /// Injection probability of each path length.
    pub per_path_rate: f64,
    pub frames: u64,
}

impl Default for LatencyScalingConfig {
    fn default() -> Self {
        LatencyScalingConfig {
            hops: 4,
            epsilon: 0.5,
            per_path_rate: 0.0125,
            frames: 20_000,
        }
    }
}

/// Line `0 -> 1 -> ... -> hops` with the prefix paths of every length.
pub fn line_network(hops: usize) -> Result<(NetworkInstance, Vec<Arc<RoutePath>>)> {
    let pairs: Vec<_> = (0..hops as u64).map(|i| (i, i + 1)).collect();
    let net = NetworkInstance::from_pairs(hops as u64 + 1, &pairs, hops)?;
    let paths = (1..=hops)
        .map(|d| RoutePath::new(&net, (0..d).map(LinkId).collect()).map(Arc::new))
        .collect::<Result<_>>()?;
    Ok((net, paths))
}

pub fn latency_scaling(cfg: &LatencyScalingConfig, opts: &ExperimentOptions) -> Result<ExperimentReport> {
    let (_, paths) = line_network(cfg.hops)?;
    let w = build_w_identity::<f64>(cfg.hops);
    let scheduler = SchedulerDescriptor::single_hop();
    let frame = compute_frame_params(cfg.epsilon, &scheduler, cfg.hops)?;
    let oracle = EdgeCapacityOracle::new(cfg.hops);
    let spec = independent_generators(&paths, cfg.per_path_rate)?;
    if stochastic_rate(&spec, &w)? > frame.lambda {
        return Err(Error::InvalidParameter("injection rate above the design rate".into()));
    }
    let logs = map_seeds(opts, |seed| {
        run_simulation(&Simulation {
            matrix: &w,
            frame,
            scheduler: &scheduler,
            oracle: &oracle,
            source: InjectionSource::Stochastic(spec.clone()),
            horizon: cfg.frames,
            seed,
            record_packets: false,
        })
    })?;
    let refs: Vec<&MetricsLog> = logs.iter().collect();
    let lat = latency_summary_from(&pooled_latency(&refs), frame.t)?;
    let mut report = ExperimentReport::new("latency-scaling", &opts.seeds);
    for g in &lat.groups {
        report.estimates.push(Estimate {
            name: format!("mean latency d={} (slots)", g.d),
            value: g.mean,
            std_error: g.std_error,
            sample_size: g.count,
            ci_low: g.ci_low,
            ci_high: g.ci_high,
        });
    }
    let a = lat
        .slope
        .ok_or_else(|| Error::InsufficientData("deliveries for fewer than two path lengths".into()))?;
    let se = lat.slope_std_error.unwrap_or(0.0);
    let e = Estimate {
        name: "latency / (d T) fit".into(),
        value: a,
        std_error: se,
        sample_size: lat.groups.iter().map(|g| g.count).sum(),
        ci_low: a - 1.96 * se,
        ci_high: a + 1.96 * se,
    };
    report.verdict("latency linear in d T", &e, "a <= 4", a <= 4.0);
    report.estimates.push(e);
    if let Some(g) = lat.group(1) {
        let e = Estimate {
            name: "single-hop mean latency (frames)".into(),
            value: g.mean / frame.t as f64,
            std_error: g.std_error / frame.t as f64,
            sample_size: g.count,
            ci_low: g.ci_low / frame.t as f64,
            ci_high: g.ci_high / frame.t as f64,
        };
        report.verdict("single hop within two frames", &e, "mean <= 2 T", e.value <= 2.0);
        report.estimates.push(e);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialConfig {
    pub m: usize,
    pub epsilon: f64,
    pub window: u64,
    /// Trace rate as a fraction of the wrapped protocol's rate.
    pub load: f64,
    pub frames: u64,
}

impl Default for AdversarialConfig {
    fn default() -> Self {
        AdversarialConfig {
            m: 2,
            epsilon: 0.5,
            window: 10,
            load: 0.5,
            frames: 2000,
        }
    }
}

pub struct AdversarialOutcome {
    pub adversarial: MetricsLog,
    pub stochastic: MetricsLog,
    pub trace_ok: bool,
    pub trace_rate: f64,
}

pub fn adversarial_seed(cfg: &AdversarialConfig, seed: u64) -> Result<(FrameConfig, u64, AdversarialOutcome)> {
    let (_, paths) = star_network(cfg.m)?;
    let w = build_w_mac::<f64>(cfg.m);
    let scheduler = SchedulerDescriptor::round_robin_withholding();
    let oracle = MacOracle::new(cfg.m);
    let (frame, wrapper) = adversarial_params(cfg.epsilon, &scheduler, cfg.m, 1, cfg.window, None)?;
    let rate = cfg.load * wrapper.lambda_prime;
    let horizon = cfg.frames * frame.t;
    let mut rng = substream(seed, Stream::Trace);
    let trace = generate_saturating_trace(&w, cfg.window, rate, TracePattern::Uniform, horizon, &paths, &mut rng)?;
    let trace_ok = validate_window_trace(&trace, &w)?.is_ok();
    let trace_rate = trace.len() as f64 / horizon as f64;
    let base = |source| Simulation {
        matrix: &w,
        frame,
        scheduler: &scheduler,
        oracle: &oracle,
        source,
        horizon: cfg.frames,
        seed,
        record_packets: false,
    };
    let adversarial = run_simulation(&base(InjectionSource::Adversarial { trace, wrapper }))?;
    let spec = independent_generators(&paths, trace_rate / cfg.m as f64)?;
    let stochastic = run_simulation(&base(InjectionSource::Stochastic(spec)))?;
    Ok((
        frame,
        wrapper.delta_max,
        AdversarialOutcome {
            adversarial,
            stochastic,
            trace_ok,
            trace_rate,
        },
    ))
}

pub fn adversarial_stability(cfg: &AdversarialConfig, opts: &ExperimentOptions) -> Result<ExperimentReport> {
    let runs = map_seeds(opts, |s| adversarial_seed(cfg, s))?;
    let (frame, delta_max) = (runs[0].0, runs[0].1);
    let mut report = ExperimentReport::new("adversarial-stability", &opts.seeds);
    let accepted = runs.iter().filter(|r| r.2.trace_ok).count() as u64;
    let e = Estimate::proportion("traces accepted by the window validator", accepted, runs.len() as u64);
    report.verdict("saturating trace valid", &e, "all accepted", accepted == runs.len() as u64);
    report.estimates.push(e);
    report.estimates.push(Estimate {
        name: "trace injection rate".into(),
        value: runs.iter().map(|r| r.2.trace_rate).sum::<f64>() / runs.len() as f64,
        std_error: 0.0,
        sample_size: runs.len() as u64,
        ci_low: 0.0,
        ci_high: 0.0,
    });

    let per_seed = runs
        .iter()
        .map(|r| stability_estimate(&r.2.adversarial.backlog_series(), DEFAULT_BURN_IN))
        .collect::<Result<Vec<_>>>()?;
    let s = combine_stability(&per_seed);
    let e = Estimate::from_stability("adversarial backlog slope", &s);
    report.verdict("adversarial run stable", &e, "slope CI contains 0", s.ci_contains(0.0));
    report.estimates.push(e);

    let adv: Vec<&MetricsLog> = runs.iter().map(|r| &r.2.adversarial).collect();
    let sto: Vec<&MetricsLog> = runs.iter().map(|r| &r.2.stochastic).collect();
    let la = latency_summary_from(&pooled_latency(&adv), frame.t)?;
    let ls = latency_summary_from(&pooled_latency(&sto), frame.t)?;
    let t = frame.t as f64;
    let diff = (la.overall_mean() - ls.overall_mean()) / t;
    let se = (la.groups[0].std_error.powi(2) + ls.groups[0].std_error.powi(2)).sqrt() / t;
    let expected = (delta_max as f64 - 1.0) / 2.0;
    let e = Estimate {
        name: "latency inflation vs stochastic twin (frames)".into(),
        value: diff,
        std_error: se,
        sample_size: la.groups[0].count + ls.groups[0].count,
        ci_low: diff - 1.96 * se,
        ci_high: diff + 1.96 * se,
    };
    report.verdict(
        "delay-wrapper latency inflation",
        &e,
        format!("(delta_max - 1)/2 = {} +- 20%", fmt_sig(expected)),
        (diff - expected).abs() <= 0.2 * expected,
    );
    report.estimates.push(e);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanupRateConfig {
    /// Links on the ring.
    pub m: usize,
    pub path_len: usize,
    pub epsilon: f64,
    pub trials: u64,
}

impl Default for CleanupRateConfig {
    fn default() -> Self {
        CleanupRateConfig {
            m: 8,
            path_len: 4,
            epsilon: 0.5,
            trials: 10_000,
        }
    }
}

/// Directed ring `0 -> 1 -> ... -> m-1 -> 0`.
pub fn ring_network(m: usize, path_len: usize) -> Result<NetworkInstance> {
    let pairs: Vec<_> = (0..m as u64).map(|i| (i, (i + 1) % m as u64)).collect();
    NetworkInstance::from_pairs(m as u64, &pairs, path_len)
}

/// Fraction of single frames in which one stuck failed packet makes progress.
pub fn cleanup_trials(cfg: &CleanupRateConfig, seed: u64) -> Result<(u64, u64)> {
    let net = ring_network(cfg.m, cfg.path_len)?;
    let path = Arc::new(RoutePath::new(&net, (0..cfg.path_len).map(LinkId).collect())?);
    let scheduler = SchedulerDescriptor::single_hop();
    let frame = compute_frame_params(cfg.epsilon, &scheduler, cfg.m)?;
    let oracle = EdgeCapacityOracle::new(cfg.m);
    let mut successes = 0;
    for i in 0..cfg.trials {
        let mut state = ProtocolState::new(oracle.link_count());
        state.fail_directly(Packet::new(PacketId(0), path.clone(), 0), 0)?;
        let before = state.potential();
        let mut trial = substream(seed, Stream::Trial(i));
        let mut unused = substream(seed, Stream::Scheduler);
        let report = run_frame(
            &mut state,
            &frame,
            &scheduler,
            &oracle,
            FrameRngs {
                scheduler: &mut unused,
                cleanup: &mut trial,
            },
        )?;
        if report.cleanup_successes > 0 {
            debug_assert_eq!(state.potential() + 1, before);
            successes += 1;
        }
    }
    Ok((successes, cfg.trials))
}

pub fn cleanup_rate(cfg: &CleanupRateConfig, opts: &ExperimentOptions) -> Result<ExperimentReport> {
    let counts = map_seeds(opts, |s| cleanup_trials(cfg, s))?;
    let (succ, trials) = counts.iter().fold((0, 0), |a, c| (a.0 + c.0, a.1 + c.1));
    let mut report = ExperimentReport::new("cleanup-rate", &opts.seeds);
    let e = Estimate::proportion("per-frame potential decrease", succ, trials);
    let bound = 1.0 / (2.0 * std::f64::consts::E * cfg.m as f64);
    report.verdict(
        "clean-up progress rate",
        &e,
        format!(">= 1/(2em) = {} - 3 SE", fmt_sig(bound)),
        e.value >= bound - 3.0 * e.std_error,
    );
    report.estimates.push(e);
    Ok(report)
}
