//! Scenario configuration and the files it points to.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! seed = 7
//! network = "net.toml"          # relative to the config file
//! geometry = "geo.toml"         # SINR models only
//! epsilon = 0.5
//! horizon = 200                 # frames
//! override_t = 5000             # optional, marks outputs out-of-theory
//!
//! [model]
//! kind = "mac"                  # sinr-linear | sinr-monotone | sinr-power-control
//!                               # | mac | conflict | node-constraint | routing
//!
//! [scheduler]
//! kind = "mac-symmetric"        # random-access | mac-symmetric
//!                               # | round-robin-withholding | single-hop | dense
//! phi = 1.0
//! delta = 0.5
//!
//! [injection]
//! kind = "stochastic"           # none | stochastic | adversarial
//! file = "spec.txt"
//!
//! [requests]                    # run-static only
//! queues = [2, 0, 1]
//! ```
//!
//! Network file (TOML):
//!
//! ```toml
//! D = 2
//! nodes = [0, 1, 2]
//! [[links]]
//! id = 0
//! sender = 0
//! receiver = 1
//! ```
//!
//! Geometry file (TOML): either `[[points]]` tables with `node`, `x`, `y`,
//! or `nodes = [...]` plus a square `distances` table.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dynsched::builders::{
    build_w_conflict, build_w_identity, build_w_linear, build_w_mac, build_w_monotone, build_w_node_constraint,
    build_w_power_control, ConflictGraph, GeometricInstance, LinkGeometry, PowerAssignment, SinrInstance, SinrParams,
};
use dynsched::model::NetworkSpec;
use dynsched::oracle::{AckOnly, ConflictOracle, EdgeCapacityOracle, MacOracle, Oracle, SinrOracle};
use dynsched::sched::{Request, SchedulerDescriptor};
use dynsched::{LinkId, Matrix, NetworkInstance, NodeId};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub network: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<PathBuf>,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheduler: Option<SchedulerConfig>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub override_t: Option<u64>,
    #[serde(default)]
    pub injection: InjectionConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requests: Option<RequestsConfig>,
    /// Output directory; `--out` wins over it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_epsilon() -> f64 {
    0.5
}

fn default_horizon() -> u64 {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    SinrLinear,
    SinrMonotone,
    SinrPowerControl,
    Mac,
    Conflict,
    NodeConstraint,
    Routing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// Exponent of the monotone sublinear power assignment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_scale: Option<f64>,
    /// Conflict edges between link ids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize)>>,
    /// Strip channel-state feedback from the oracle.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ack_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerKind {
    RandomAccess,
    MacSymmetric,
    RoundRobinWithholding,
    SingleHop,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulerConfig {
    pub kind: SchedulerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Random-access cap constant (also the base of `dense`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InjectionKind {
    #[default]
    None,
    Stochastic,
    Adversarial,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionConfig {
    #[serde(default)]
    pub kind: InjectionKind,
    /// Stochastic spec or adversarial trace text file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

/// Static request set: per-link queue lengths or one link id per request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queues: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub links: Option<Vec<usize>>,
    /// Interference bound handed to the scheduler; defaults to `||W R||_inf`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interference: Option<f64>,
    /// Size parameter; defaults to the number of requests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).context("malformed scenario config")?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Reads `path` and rebases relative file references onto its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("in config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.network);
        if let Some(g) = cfg.geometry.as_mut() {
            rebase(g);
        }
        if let Some(f) = cfg.injection.file.as_mut() {
            rebase(f);
        }
        if let Some(o) = cfg.out.as_mut() {
            rebase(o);
        }
        Ok(cfg)
    }

    /// Selector-dependent required fields.
    fn check(&self) -> Result<()> {
        let m = &self.model;
        match m.kind {
            ModelKind::SinrLinear | ModelKind::SinrMonotone | ModelKind::SinrPowerControl => {
                if self.geometry.is_none() {
                    bail!("model `{}` needs a geometry file", kind_name(m.kind));
                }
                if m.alpha.is_none() {
                    bail!("model `{}` needs model.alpha", kind_name(m.kind));
                }
                if m.kind != ModelKind::SinrPowerControl && m.beta.is_none() {
                    bail!("model `{}` needs model.beta", kind_name(m.kind));
                }
                if m.kind == ModelKind::SinrMonotone && m.tau.is_none() {
                    bail!("model `sinr-monotone` needs model.tau");
                }
            }
            ModelKind::Conflict if m.edges.is_none() => bail!("model `conflict` needs model.edges"),
            _ => {}
        }
        if let Some(s) = &self.scheduler {
            match s.kind {
                SchedulerKind::MacSymmetric if s.phi.is_none() || s.delta.is_none() => {
                    bail!("scheduler `mac-symmetric` needs phi and delta")
                }
                SchedulerKind::Dense if s.phi.is_none() => bail!("scheduler `dense` needs phi"),
                _ => {}
            }
        }
        if self.injection.kind != InjectionKind::None && self.injection.file.is_none() {
            bail!("injection block needs a file");
        }
        Ok(())
    }
}

pub fn kind_name(kind: ModelKind) -> String {
    toml::Value::try_from(kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn load_network(path: &Path) -> Result<NetworkInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading network file {}", path.display()))?;
    let spec: NetworkSpec =
        toml::from_str(&text).with_context(|| format!("malformed network file {}", path.display()))?;
    spec.build().with_context(|| format!("invalid network in {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    pub node: u64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeometrySpec {
    Points { points: Vec<PointSpec> },
    Table { nodes: Vec<u64>, distances: Vec<Vec<f64>> },
}

pub fn load_geometry(path: &Path) -> Result<GeometricInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading geometry file {}", path.display()))?;
    let spec: GeometrySpec =
        toml::from_str(&text).with_context(|| format!("malformed geometry file {}", path.display()))?;
    let geo = match spec {
        GeometrySpec::Points { points } => {
            GeometricInstance::from_positions(points.into_iter().map(|p| (NodeId(p.node), p.x, p.y)).collect())
        }
        GeometrySpec::Table { nodes, distances } => {
            GeometricInstance::from_table(nodes.into_iter().map(NodeId).collect(), distances)
        }
    };
    geo.with_context(|| format!("invalid geometry in {}", path.display()))
}

/// The interference matrix and the success oracle of one scenario.
pub struct Model {
    pub net: NetworkInstance,
    pub matrix: Matrix,
    pub oracle: Box<dyn Oracle>,
    /// Links whose signal cannot beat the noise floor on their own.
    pub infeasible: Vec<LinkId>,
}

impl ScenarioConfig {
    pub fn build_model(&self) -> Result<Model> {
        let net = load_network(&self.network)?;
        let links = net.link_count();
        let m = &self.model;
        let ctx = || format!("building the `{}` model", kind_name(m.kind));
        let mut infeasible = Vec::new();
        let (matrix, oracle): (Matrix, Box<dyn Oracle>) = match m.kind {
            ModelKind::Mac => (build_w_mac(links), Box::new(MacOracle::new(links))),
            ModelKind::Routing => (build_w_identity(links), Box::new(EdgeCapacityOracle::new(links))),
            ModelKind::NodeConstraint => (
                build_w_node_constraint(&net),
                Box::new(ConflictOracle::new(ConflictGraph::node_constraint(&net))),
            ),
            ModelKind::Conflict => {
                let cg = ConflictGraph::new(links, m.edges.as_deref().unwrap_or_default()).with_context(ctx)?;
                (build_w_conflict(&cg), Box::new(ConflictOracle::new(cg)))
            }
            ModelKind::SinrLinear | ModelKind::SinrMonotone | ModelKind::SinrPowerControl => {
                let geo = load_geometry(self.geometry.as_deref().expect("checked at parse time"))?;
                let lg = LinkGeometry::new(&net, geo).with_context(ctx)?;
                let alpha = m.alpha.expect("checked at parse time");
                let params = SinrParams::new(alpha, m.beta.unwrap_or(1.0), m.nu.unwrap_or(0.0)).with_context(ctx)?;
                let scale = m.power_scale.unwrap_or(1.0);
                // Power control has no fixed assignment; its oracle uses linear powers.
                let power = match m.kind {
                    ModelKind::SinrMonotone => {
                        PowerAssignment::sublinear(&lg, alpha, m.tau.expect("checked at parse time"), scale)
                    }
                    _ => PowerAssignment::linear(&lg, alpha, scale),
                };
                let inst = SinrInstance::new(lg.clone(), power, params).with_context(ctx)?;
                let matrix = match m.kind {
                    ModelKind::SinrLinear => {
                        let built = build_w_linear(&inst).with_context(ctx)?;
                        infeasible = built.infeasible;
                        built.matrix
                    }
                    ModelKind::SinrMonotone => {
                        let built = build_w_monotone(&inst).with_context(ctx)?;
                        infeasible = built.infeasible;
                        built.matrix
                    }
                    _ => build_w_power_control(&lg, alpha).with_context(ctx)?,
                };
                (matrix, Box::new(SinrOracle::new(inst)))
            }
        };
        let oracle: Box<dyn Oracle> = if m.ack_only { Box::new(AckOnly(oracle)) } else { oracle };
        Ok(Model {
            net,
            matrix,
            oracle,
            infeasible,
        })
    }

    pub fn build_scheduler(&self, m: usize) -> Result<SchedulerDescriptor> {
        let Some(s) = &self.scheduler else {
            bail!("config has no [scheduler] block");
        };
        let c = s.c.unwrap_or(dynsched::sched::DEFAULT_CAP_CONSTANT);
        let d = match s.kind {
            SchedulerKind::RandomAccess => SchedulerDescriptor::random_access(c)?,
            SchedulerKind::MacSymmetric => {
                SchedulerDescriptor::mac_symmetric(s.phi.unwrap_or(1.0), s.delta.unwrap_or(0.5))?
            }
            SchedulerKind::RoundRobinWithholding => SchedulerDescriptor::round_robin_withholding(),
            SchedulerKind::SingleHop => SchedulerDescriptor::single_hop(),
            SchedulerKind::Dense => {
                SchedulerDescriptor::dense(&SchedulerDescriptor::random_access(c)?, s.phi.unwrap_or(1.0), m)?
            }
        };
        Ok(d)
    }

    pub fn build_requests(&self, links: usize) -> Result<Vec<Request>> {
        let Some(r) = &self.requests else {
            bail!("config has no [requests] block");
        };
        let link_ids: Vec<usize> = match (&r.queues, &r.links) {
            (Some(q), None) => {
                if q.len() != links {
                    bail!("requests.queues has {} entries for {links} links", q.len());
                }
                return Ok(dynsched::sched::mac::queue_requests(q));
            }
            (None, Some(l)) => l.clone(),
            (None, None) => Vec::new(),
            (Some(_), Some(_)) => bail!("requests takes either queues or links, not both"),
        };
        if let Some(&bad) = link_ids.iter().find(|&&l| l >= links) {
            bail!("request on unknown link {bad}");
        }
        Ok(link_ids.iter().enumerate().map(|(i, &l)| Request::new(i as u64, l)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
seed = 3
network = "net.toml"
geometry = "geo.toml"
epsilon = 0.25
horizon = 40
override_t = 900

[model]
kind = "sinr-monotone"
alpha = 3.0
beta = 1.5
nu = 0.0
tau = 0.5

[scheduler]
kind = "dense"
phi = 2.0
c = 64.0

[injection]
kind = "stochastic"
file = "spec.txt"

[requests]
links = [0, 1, 1]
"#;

    #[test]
    fn round_trip_is_identity() {
        let a = ScenarioConfig::parse(FULL).unwrap();
        let b = ScenarioConfig::parse(&a.to_toml().unwrap()).unwrap();
        assert_eq!(a, b);
        let minimal = "seed = 1\nnetwork = \"n.toml\"\n[model]\nkind = \"mac\"\n";
        let c = ScenarioConfig::parse(minimal).unwrap();
        assert_eq!(c, ScenarioConfig::parse(&c.to_toml().unwrap()).unwrap());
        assert_eq!(c.epsilon, 0.5);
    }

    #[test]
    fn missing_fields_are_reported() {
        let no_seed = "network = \"n.toml\"\n[model]\nkind = \"mac\"\n";
        assert!(ScenarioConfig::parse(no_seed).is_err());
        let no_geo = "seed = 1\nnetwork = \"n.toml\"\n[model]\nkind = \"sinr-linear\"\nalpha = 3.0\nbeta = 1.0\n";
        let e = format!("{:#}", ScenarioConfig::parse(no_geo).unwrap_err());
        assert!(e.contains("geometry"), "{e}");
        let no_edges = "seed = 1\nnetwork = \"n.toml\"\n[model]\nkind = \"conflict\"\n";
        assert!(ScenarioConfig::parse(no_edges).is_err());
        let typo = "seed = 1\nnetwork = \"n.toml\"\nhorizn = 3\n[model]\nkind = \"mac\"\n";
        assert!(ScenarioConfig::parse(typo).is_err());
    }

    #[test]
    fn model_names_are_kebab_case() {
        assert_eq!(kind_name(ModelKind::SinrPowerControl), "sinr-power-control");
        assert_eq!(kind_name(ModelKind::NodeConstraint), "node-constraint");
    }
}
