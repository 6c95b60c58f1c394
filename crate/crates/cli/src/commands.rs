//! The five batch commands. Each returns the text it printed so tests can
//! inspect it; primary outputs go to files in the output directory.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use dynsched::injection::{validate_window_trace, AdversarialTrace, StochasticSpec, TraceCheck};
use dynsched::metrics::report::fmt_sig;
use dynsched::metrics::{run_experiment, stability_estimate, ExperimentOptions, ExperimentReport, DEFAULT_BURN_IN};
use dynsched::protocol::{
    adversarial_params, compute_frame_params, frame_params_with_t, run_simulation, FrameConfig, InjectionSource,
    Simulation,
};
use dynsched::rng::{substream, Stream};
use dynsched::sched::{validate_schedule, RunParams, ScheduleRun};
use dynsched::{interference_measure, validate_matrix, Matrix};

use crate::config::{kind_name, InjectionKind, ScenarioConfig};

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    let path = dir.join(name);
    tmp.persist(&path).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn matrix_triplets(w: &Matrix) -> String {
    let mut s = format!("# dim {} nnz {}\n", w.dim(), w.nnz());
    for (r, c, v) in w.triplets() {
        let _ = writeln!(s, "{r} {c} {}", fmt_sig(v));
    }
    s
}

/// Inverse of [`matrix_triplets`].
pub fn parse_triplets(text: &str) -> Result<Matrix> {
    let mut dim = None;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        match f[..] {
            [] => {}
            ["#", "dim", d, "nnz", _] => dim = Some(d.parse::<usize>()?),
            [r, c, v] => entries.push((r.parse()?, c.parse()?, v.parse::<f64>()?)),
            _ => bail!("line {}: expected `row col value`", i + 1),
        }
    }
    let Some(dim) = dim else { bail!("missing `# dim` header") };
    Ok(Matrix::from_triplets(dim, entries)?)
}

pub fn build_matrix(cfg: &ScenarioConfig, out: &Path) -> Result<String> {
    let model = cfg.build_model()?;
    let check = validate_matrix(&model.matrix);
    write_atomic(out, "matrix.txt", &matrix_triplets(&model.matrix))?;
    let mut report = String::new();
    let _ = writeln!(report, "model {}", kind_name(cfg.model.kind));
    let _ = writeln!(report, "links {}", model.matrix.dim());
    let _ = writeln!(report, "nnz {}", model.matrix.nnz());
    if check.is_ok() {
        let _ = writeln!(report, "validation ok");
    } else {
        let _ = writeln!(report, "validation failed {}", check.violations.len());
        for v in &check.violations {
            let _ = writeln!(report, "violation {:?} {} {} {}", v.kind, v.row, v.col, fmt_sig(v.value));
        }
    }
    let infeasible: Vec<String> = model.infeasible.iter().map(|l| l.0.to_string()).collect();
    let _ = writeln!(
        report,
        "infeasible_links {}",
        if infeasible.is_empty() { "none".into() } else { infeasible.join(",") }
    );
    write_atomic(out, "matrix_report.txt", &report)?;
    if !check.is_ok() {
        bail!("matrix failed validation; see matrix_report.txt");
    }
    Ok(report)
}

fn schedule_log(run: &ScheduleRun) -> String {
    let mut s = String::from("slot attempts\n");
    for rec in run.log.iter().flatten() {
        let cells: Vec<String> = rec
            .attempts
            .iter()
            .zip(&rec.success)
            .map(|(&(i, l), &ok)| format!("{i}@{}:{}", l.0, if ok { "ok" } else { "fail" }))
            .collect();
        let _ = writeln!(s, "{} {}", rec.slot, cells.join(" "));
    }
    s
}

pub fn run_static(cfg: &ScenarioConfig, out: &Path) -> Result<String> {
    let model = cfg.build_model()?;
    let links = model.net.link_count();
    let sched = cfg.build_scheduler(model.net.size())?;
    sched.check_oracle(model.oracle.as_ref())?;
    let reqs = cfg.build_requests(links)?;
    let r = dynsched::model::request_vector_from_links(links, reqs.iter().map(|q| q.link))?;
    let rq = cfg.requests.as_ref().expect("build_requests succeeded");
    let interference = match rq.interference {
        Some(i) => i,
        None => interference_measure(&model.matrix, &r)?,
    };
    let n = rq.n.unwrap_or(reqs.len() as f64);
    let mut rng = substream(cfg.seed, Stream::Scheduler);
    let run = sched
        .algorithm
        .run(&reqs, &RunParams::new(interference, n).logged(), model.oracle.as_ref(), &mut rng)?;
    let check = validate_schedule(&run, &reqs, model.oracle.as_ref());
    write_atomic(out, "schedule.txt", &schedule_log(&run))?;
    let mut s = String::new();
    let _ = writeln!(s, "scheduler {}", sched.name);
    let _ = writeln!(s, "requests {}", reqs.len());
    let _ = writeln!(s, "interference {}", fmt_sig(interference));
    let _ = writeln!(s, "slotsUsed {}", run.slots_used);
    let _ = writeln!(s, "served {}", run.served.len());
    let unserved: Vec<String> = run.unserved.iter().map(|i| reqs[*i].id.0.to_string()).collect();
    let _ = writeln!(s, "unserved {}", if unserved.is_empty() { "none".into() } else { unserved.join(",") });
    if check.is_ok() {
        let _ = writeln!(s, "validation ok");
    } else {
        for v in &check.violations {
            let _ = writeln!(s, "violation {v}");
        }
    }
    write_atomic(out, "summary.txt", &s)?;
    if !check.is_ok() {
        bail!("schedule failed replay validation");
    }
    Ok(s)
}

fn read_injection_file(cfg: &ScenarioConfig) -> Result<(PathBuf, String)> {
    let path = cfg.injection.file.clone().context("injection block has no file")?;
    let text = fs::read_to_string(&path).with_context(|| format!("reading injection file {}", path.display()))?;
    Ok((path, text))
}

fn frame_summary(s: &mut String, f: &FrameConfig) {
    let _ = writeln!(s, "T {}", f.t);
    let _ = writeln!(s, "J {}", fmt_sig(f.j));
    let _ = writeln!(s, "lambda {}", fmt_sig(f.lambda));
    let _ = writeln!(s, "phase1 {}", f.tprime);
    let _ = writeln!(s, "cleanup {}", f.cleanup);
    let _ = writeln!(s, "outOfTheory {}", f.out_of_theory);
}

pub fn run_dynamic(cfg: &ScenarioConfig, out: &Path) -> Result<String> {
    let model = cfg.build_model()?;
    let m = model.net.size();
    let sched = cfg.build_scheduler(m)?;
    let eps = cfg.epsilon;
    let (frame, source) = match cfg.injection.kind {
        InjectionKind::None | InjectionKind::Stochastic => {
            let frame = match cfg.override_t {
                Some(t) => frame_params_with_t(eps, &sched, m, t)?,
                None => compute_frame_params(eps, &sched, m)?,
            };
            let source = if cfg.injection.kind == InjectionKind::None {
                InjectionSource::None
            } else {
                let (path, text) = read_injection_file(cfg)?;
                let spec = StochasticSpec::parse(&model.net, &text)
                    .with_context(|| format!("in injection spec {}", path.display()))?;
                InjectionSource::Stochastic(Arc::new(spec))
            };
            (frame, source)
        }
        InjectionKind::Adversarial => {
            let (path, text) = read_injection_file(cfg)?;
            let trace = AdversarialTrace::parse(&model.net, &text)
                .with_context(|| format!("in adversarial trace {}", path.display()))?;
            if let TraceCheck::Violation { start, .. } = validate_window_trace(&trace, &model.matrix)? {
                bail!(
                    "adversarial trace violates the ({}, {}) bound in the window starting at slot {start}",
                    trace.window(),
                    trace.rate()
                );
            }
            let (frame, wrapper) =
                adversarial_params(eps, &sched, m, model.net.max_path_len(), trace.window(), cfg.override_t)?;
            (frame, InjectionSource::Adversarial { trace, wrapper })
        }
    };
    let sim = Simulation {
        matrix: &model.matrix,
        frame,
        scheduler: &sched,
        oracle: model.oracle.as_ref(),
        source,
        horizon: cfg.horizon,
        seed: cfg.seed,
        record_packets: true,
    };
    let log = run_simulation(&sim)?;
    write_atomic(out, "frames.csv", &log.frames_csv())?;
    write_atomic(out, "packets.csv", &log.packets_csv())?;

    let mut s = String::new();
    let _ = writeln!(s, "scheduler {}", sched.name);
    let _ = writeln!(s, "m {m}");
    frame_summary(&mut s, &frame);
    let _ = writeln!(s, "frames {}", log.frames.len());
    let _ = writeln!(s, "injections {}", log.frames.iter().map(|r| r.injections).sum::<u64>());
    let _ = writeln!(s, "deliveries {}", log.total_deliveries());
    let _ = writeln!(s, "finalBacklog {}", log.frames.last().map_or(0, |r| r.backlog));
    match stability_estimate(&log.backlog_series(), DEFAULT_BURN_IN) {
        Ok(e) => {
            let _ = writeln!(
                s,
                "backlogSlope {} se {} ci [{}, {}]",
                fmt_sig(e.slope),
                fmt_sig(e.std_error),
                fmt_sig(e.ci_low),
                fmt_sig(e.ci_high)
            );
        }
        Err(e) => {
            let _ = writeln!(s, "backlogSlope unavailable ({e})");
        }
    }
    write_atomic(out, "summary.txt", &s)?;
    Ok(s)
}

/// Returns the verdict text and whether the trace is valid.
pub fn validate_trace(cfg: &ScenarioConfig, trace_path: Option<&Path>) -> Result<(String, bool)> {
    let model = cfg.build_model()?;
    let (path, text) = match trace_path {
        Some(p) => (
            p.to_path_buf(),
            fs::read_to_string(p).with_context(|| format!("reading trace {}", p.display()))?,
        ),
        None => read_injection_file(cfg)?,
    };
    let trace = AdversarialTrace::parse(&model.net, &text).with_context(|| format!("in trace {}", path.display()))?;
    let verdict = validate_window_trace(&trace, &model.matrix)?;
    let mut s = format!(
        "trace {} injections {} window {} rate {}\n",
        path.display(),
        trace.len(),
        trace.window(),
        fmt_sig(trace.rate())
    );
    match verdict {
        TraceCheck::Ok => s.push_str("verdict ok\n"),
        TraceCheck::Violation { start, measure } => {
            let _ = writeln!(
                s,
                "verdict violation window_start {start} measure {} limit {}",
                fmt_sig(measure),
                fmt_sig(trace.window() as f64 * trace.rate())
            );
        }
    }
    Ok((s, verdict.is_ok()))
}

pub fn experiment(name: &str, opts: &ExperimentOptions, out: &Path) -> Result<ExperimentReport> {
    let report = run_experiment(name, opts)?;
    write_atomic(out, &format!("{name}.txt"), &report.to_text())?;
    Ok(report)
}
