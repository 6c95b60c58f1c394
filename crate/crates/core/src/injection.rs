//! Injection models: independent stochastic generators and offline
//! `(w, lambda)`-bounded adversarial traces.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{weighted_loads, InterferenceMatrix, LinkId, NetworkInstance, RoutePath};
use crate::rng::{substream, SimRng, Stream};
use crate::scalar::{lit, Weight};

/// One generator: a distribution over paths (plus "nothing") each slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    options: Vec<(Arc<RoutePath>, f64)>,
    total: f64,
}

impl Generator {
    pub fn new(options: Vec<(Arc<RoutePath>, f64)>) -> Result<Self> {
        for (_, p) in &options {
            if !(*p > 0.0 && *p <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "injection probability {p} outside (0, 1]"
                )));
            }
        }
        let total: f64 = options.iter().map(|o| o.1).sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "generator probability mass {total} exceeds 1"
            )));
        }
        Ok(Generator {
            options,
            total: total.min(1.0),
        })
    }

    pub fn options(&self) -> &[(Arc<RoutePath>, f64)] {
        &self.options
    }

    /// Probability of injecting anything in a slot.
    pub fn mass(&self) -> f64 {
        self.total
    }

    /// Path drawn conditionally on an injection happening.
    fn pick(&self, rng: &mut SimRng) -> &Arc<RoutePath> {
        let mut u = rng.random::<f64>() * self.total;
        for (path, p) in &self.options {
            if u < *p {
                return path;
            }
            u -= p;
        }
        &self.options[self.options.len() - 1].0
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StochasticSpec {
    pub generators: Vec<Generator>,
}

impl StochasticSpec {
    pub fn new(generators: Vec<Generator>) -> Self {
        StochasticSpec { generators }
    }

    /// `F(e)`: expected requests per slot on each link, counting multiplicity.
    pub fn expected_requests(&self, links: usize) -> Result<Vec<f64>> {
        let mut f = vec![0.0; links];
        for g in &self.generators {
            for (path, p) in &g.options {
                for &l in path.hops() {
                    *f.get_mut(l.0).ok_or(Error::UnknownLink(l))? += p;
                }
            }
        }
        Ok(f)
    }
}

/// `||W F||_inf`.
pub fn stochastic_rate<S: Weight>(spec: &StochasticSpec, w: &InterferenceMatrix<S>) -> Result<S> {
    let f: Vec<S> = spec
        .expected_requests(w.dim())?
        .into_iter()
        .map(lit::<S>)
        .collect();
    Ok(weighted_loads(w, &f)?.into_iter().fold(S::zero(), S::max_of))
}

/// Samples generators slot by slot, each from its own substream.
///
/// Gaps between a generator's injections are geometric with its total mass,
/// which is the same law as an independent draw every slot.
pub struct InjectionSampler {
    spec: Arc<StochasticSpec>,
    rngs: Vec<SimRng>,
    gaps: Vec<Option<Geometric>>,
    next: Vec<u64>,
}

impl InjectionSampler {
    pub fn new(spec: Arc<StochasticSpec>, seed: u64) -> Self {
        let mut rngs: Vec<SimRng> = (0..spec.generators.len())
            .map(|g| substream(seed, Stream::Generator(g as u64)))
            .collect();
        let gaps: Vec<Option<Geometric>> = spec
            .generators
            .iter()
            .map(|g| (g.mass() > 0.0).then(|| Geometric::new(g.mass()).expect("mass in (0, 1]")))
            .collect();
        let next = gaps
            .iter()
            .zip(rngs.iter_mut())
            .map(|(g, rng)| g.as_ref().map_or(u64::MAX, |g| g.sample(rng)))
            .collect();
        InjectionSampler {
            spec,
            rngs,
            gaps,
            next,
        }
    }

    /// Injections with slot in `[start, end)`, sorted by (slot, generator).
    /// Calls must cover consecutive, nondecreasing ranges.
    pub fn sample_range(&mut self, start: u64, end: u64) -> Vec<(u64, usize, Arc<RoutePath>)> {
        let mut out = Vec::new();
        for g in 0..self.next.len() {
            while self.next[g] < start {
                self.advance(g);
            }
            while self.next[g] < end {
                let path = self.spec.generators[g].pick(&mut self.rngs[g]).clone();
                out.push((self.next[g], g, path));
                self.advance(g);
            }
        }
        out.sort_by_key(|&(slot, g, _)| (slot, g));
        out
    }

    fn advance(&mut self, g: usize) {
        let gap = self.gaps[g].as_ref().map_or(u64::MAX, |d| d.sample(&mut self.rngs[g]));
        self.next[g] = self.next[g].saturating_add(1).saturating_add(gap);
    }
}

/// Injections of a single slot: at most one packet per generator.
pub fn sample_injections(sampler: &mut InjectionSampler, slot: u64) -> Vec<(usize, Arc<RoutePath>)> {
    sampler
        .sample_range(slot, slot + 1)
        .into_iter()
        .map(|(_, g, p)| (g, p))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialTrace {
    injections: Vec<(u64, Arc<RoutePath>)>,
    window: u64,
    rate: f64,
}

impl AdversarialTrace {
    pub fn new(injections: Vec<(u64, Arc<RoutePath>)>, window: u64, rate: f64) -> Result<Self> {
        if window == 0 || !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter(
                "trace needs a positive window and rate".into(),
            ));
        }
        if injections.windows(2).any(|p| p[0].0 > p[1].0) {
            return Err(Error::InvalidParameter("trace slots must be nondecreasing".into()));
        }
        Ok(AdversarialTrace {
            injections,
            window,
            rate,
        })
    }

    pub fn injections(&self) -> &[(u64, Arc<RoutePath>)] {
        &self.injections
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn len(&self) -> usize {
        self.injections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.injections.is_empty()
    }

    /// Copy without injection `i`.
    pub fn without(&self, i: usize) -> Self {
        let mut t = self.clone();
        t.injections.remove(i);
        t
    }

    /// Line format: `window W rate R`, then `slot l0,l1,...` per injection.
    pub fn to_text(&self) -> String {
        let mut s = format!("window {} rate {}\n", self.window, self.rate);
        for (slot, path) in &self.injections {
            s.push_str(&format!("{slot} {}\n", path_text(path)));
        }
        s
    }

    pub fn parse(net: &NetworkInstance, text: &str) -> Result<Self> {
        let mut header = None;
        let mut injections = Vec::new();
        for (lineno, line) in content_lines(text) {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if header.is_none() {
                match fields[..] {
                    ["window", w, "rate", r] => {
                        header = Some((parse_num::<u64>(w, lineno)?, parse_num::<f64>(r, lineno)?));
                        continue;
                    }
                    _ => return Err(parse_err(lineno, "expected `window W rate R` header")),
                }
            }
            match fields[..] {
                [slot, path] => injections.push((
                    parse_num::<u64>(slot, lineno)?,
                    Arc::new(parse_path(net, path, lineno)?),
                )),
                _ => return Err(parse_err(lineno, "expected `slot l0,l1,...`")),
            }
        }
        let (w, r) = header.ok_or_else(|| parse_err(0, "missing header"))?;
        Self::new(injections, w, r)
    }
}

fn path_text(path: &RoutePath) -> String {
    path.hops()
        .iter()
        .map(|l| l.0.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_err(line: usize, message: &str) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| parse_err(line, &format!("bad number `{s}`")))
}

fn parse_path(net: &NetworkInstance, s: &str, line: usize) -> Result<RoutePath> {
    let hops = s
        .split(',')
        .map(|h| parse_num::<usize>(h, line).map(LinkId))
        .collect::<Result<Vec<_>>>()?;
    RoutePath::new(net, hops)
}

impl StochasticSpec {
    /// Line format: `generator probability l0,l1,...`; generator indices are
    /// dense and rows of one generator are consecutive or not, in any order.
    pub fn parse(net: &NetworkInstance, text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<(Arc<RoutePath>, f64)>> = Vec::new();
        for (lineno, line) in content_lines(text) {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [g, p, path] = fields[..] else {
                return Err(parse_err(lineno, "expected `generator probability path`"));
            };
            let g: usize = parse_num(g, lineno)?;
            if rows.len() <= g {
                rows.resize(g + 1, Vec::new());
            }
            rows[g].push((Arc::new(parse_path(net, path, lineno)?), parse_num(p, lineno)?));
        }
        Ok(StochasticSpec::new(
            rows.into_iter().map(Generator::new).collect::<Result<_>>()?,
        ))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (g, gen) in self.generators.iter().enumerate() {
            for (path, p) in &gen.options {
                s.push_str(&format!("{g} {p} {}\n", path_text(path)));
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TraceCheck {
    Ok,
    /// Earliest window start whose measure exceeds `w * lambda`.
    Violation { start: u64, measure: f64 },
}

impl TraceCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, TraceCheck::Ok)
    }
}

/// Incrementally maintained `W R` for a sliding multiset of paths.
struct WindowLoad<'a, S> {
    cols: Vec<Vec<(usize, S)>>,
    loads: Vec<S>,
    _w: std::marker::PhantomData<&'a S>,
}

impl<'a, S: Weight> WindowLoad<'a, S> {
    fn new(w: &'a InterferenceMatrix<S>) -> Self {
        let mut cols = vec![Vec::new(); w.dim()];
        for (r, c, v) in w.triplets() {
            cols[c].push((r, v));
        }
        WindowLoad {
            cols,
            loads: vec![S::zero(); w.dim()],
            _w: std::marker::PhantomData,
        }
    }

    fn apply(&mut self, path: &RoutePath, add: bool) -> Result<()> {
        for &l in path.hops() {
            let col = self.cols.get(l.0).ok_or(Error::UnknownLink(l))?;
            for &(r, v) in col {
                if add {
                    self.loads[r] = self.loads[r] + v;
                } else {
                    self.loads[r] = self.loads[r] - v;
                }
            }
        }
        Ok(())
    }

    fn measure(&self) -> S {
        self.loads.iter().copied().fold(S::zero(), S::max_of)
    }
}

/// Measures `||W R||_inf` of the window ending at each distinct injection
/// slot (every other window holds a subset of one of these) and calls
/// `visit(start, measure)` in order, stopping when it returns false.
fn scan_windows<S: Weight>(
    trace: &AdversarialTrace,
    w: &InterferenceMatrix<S>,
    mut visit: impl FnMut(u64, S) -> bool,
) -> Result<()> {
    let inj = &trace.injections;
    let mut load = WindowLoad::new(w);
    let (mut head, mut tail) = (0, 0);
    while head < inj.len() {
        let end = inj[head].0;
        while head < inj.len() && inj[head].0 == end {
            load.apply(&inj[head].1, true)?;
            head += 1;
        }
        let start = (end + 1).saturating_sub(trace.window);
        while inj[tail].0 < start {
            load.apply(&inj[tail].1, false)?;
            tail += 1;
        }
        if !visit(start, load.measure()) {
            break;
        }
    }
    Ok(())
}

/// Checks every window of `w` consecutive slots against `w * lambda + 1e-9`.
pub fn validate_window_trace<S: Weight>(trace: &AdversarialTrace, w: &InterferenceMatrix<S>) -> Result<TraceCheck> {
    let bound = trace.window as f64 * trace.rate + 1e-9;
    let mut result = TraceCheck::Ok;
    scan_windows(trace, w, |start, m| {
        let m = m.to_f64();
        if m > bound {
            result = TraceCheck::Violation { start, measure: m };
            false
        } else {
            true
        }
    })?;
    Ok(result)
}

/// Like [`validate_window_trace`] but as an error.
pub fn ensure_valid_trace<S: Weight>(trace: &AdversarialTrace, w: &InterferenceMatrix<S>) -> Result<()> {
    match validate_window_trace(trace, w)? {
        TraceCheck::Ok => Ok(()),
        TraceCheck::Violation { start, .. } => Err(Error::TraceViolation {
            window: trace.window,
            rate: trace.rate,
            start,
        }),
    }
}

/// Largest window measure divided by `w * lambda`.
pub fn trace_saturation<S: Weight>(trace: &AdversarialTrace, w: &InterferenceMatrix<S>) -> Result<f64> {
    let mut best = 0.0f64;
    scan_windows(trace, w, |_, m| {
        best = best.max(m.to_f64());
        true
    })?;
    Ok(best / (trace.window as f64 * trace.rate))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TracePattern {
    /// Fill each window as early as possible, then stay silent.
    Burst,
    /// At most one injection per slot.
    Uniform,
}

/// Greedy trace over `horizon` slots drawing from `paths`; every added
/// injection keeps the window ending at the current slot within `w * lambda`.
pub fn generate_saturating_trace<S: Weight>(
    w: &InterferenceMatrix<S>,
    window: u64,
    rate: f64,
    pattern: TracePattern,
    horizon: u64,
    paths: &[Arc<RoutePath>],
    rng: &mut SimRng,
) -> Result<AdversarialTrace> {
    let empty = AdversarialTrace::new(Vec::new(), window, rate)?;
    let bound = window as f64 * rate + 1e-9;
    let mut load = WindowLoad::new(w);
    for p in paths {
        load.apply(p, true)?;
        let alone = load.measure().to_f64();
        load.apply(p, false)?;
        if alone > bound {
            return Err(Error::InfeasibleInjection(format!(
                "path {} alone has measure {alone} > w * lambda = {}",
                path_text(p),
                window as f64 * rate
            )));
        }
    }
    let mut injections: Vec<(u64, Arc<RoutePath>)> = Vec::new();
    let mut tail = 0;
    let mut order: Vec<usize> = (0..paths.len()).collect();
    for t in 0..horizon {
        let start = (t + 1).saturating_sub(window);
        while tail < injections.len() && injections[tail].0 < start {
            load.apply(&injections[tail].1, false)?;
            tail += 1;
        }
        let per_slot = match pattern {
            TracePattern::Burst => usize::MAX,
            TracePattern::Uniform => 1,
        };
        let mut added = 0;
        while added < per_slot {
            order.shuffle(rng);
            let mut placed = false;
            for &i in &order {
                load.apply(&paths[i], true)?;
                if load.measure().to_f64() <= bound {
                    injections.push((t, paths[i].clone()));
                    placed = true;
                    added += 1;
                    break;
                }
                load.apply(&paths[i], false)?;
            }
            if !placed {
                break;
            }
        }
    }
    Ok(AdversarialTrace { injections, ..empty })
}
