//! TOML scenario files.
//!
//! A scenario names a topology (a bundled name such as `nsf14.toml`, a path
//! relative to the scenario file, or an inline `[topology]` table), a class
//! table applied to every link unless overridden, the workload phases and
//! the seeds. See `scenarios/` in this crate for commented examples.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::model::{
    validate_link_config, BamModel, Bandwidth, ClassId, LinkBamConfig, LinkId, NetworkGraph,
    SwitchId, TrafficClassConfig, ValidatedConfig,
};
use crate::path::PathTable;
use crate::sim::{ClassSpec, DemandRange, PhaseProfile, Scenario, UserSpec};

/// Reference files shipped with the crate, by file name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("nsf14.toml", include_str!("../../scenarios/nsf14.toml")),
    ("scenario1.toml", include_str!("../../scenarios/scenario1.toml")),
    ("scenario2.toml", include_str!("../../scenarios/scenario2.toml")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyFile {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    /// Switch ids `0..switches`.
    pub switches: u32,
    /// Undirected edges, each expanded to two directed links.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<[SwitchId; 2]>,
    /// Capacity of every edge, unless a link entry says otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_mbps: Option<f64>,
    /// Directed links with their own capacity.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<TopologyLink>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyLink {
    pub link: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_mbps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_kbps: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TopologyRef {
    File(String),
    Inline(TopologyFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PathsSpec {
    /// `"shortest-hop"`.
    Directive(String),
    Explicit(Vec<PathEntry>),
}

impl Default for PathsSpec {
    fn default() -> Self {
        PathsSpec::Directive(SHORTEST_HOP.to_string())
    }
}

const SHORTEST_HOP: &str = "shortest-hop";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathEntry {
    /// Switches visited, source first.
    pub hops: Vec<SwitchId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassEntry {
    pub id: u32,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub traffic: String,
    /// Larger numbers are higher priority.
    pub priority: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bc_percent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bc_mbps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bc_kbps: Option<u64>,
    /// Share of the BC other classes may borrow, in percent.
    pub sharing_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkOverride {
    pub link: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<BamModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<ClassEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand_mbps: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand_kbps: Option<[u64; 2]>,
    pub mean_holding_s: f64,
    /// Endpoint pairs requests travel between.
    pub flows: Vec<[SwitchId; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseEntry {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<u64>,
    /// Offered load of every class as a multiple of its BC on the observed
    /// link: rate = load * BC / (mean demand * mean holding time).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load: Option<f64>,
    /// Per-class load multipliers, keyed `TC0`, `TC1`, ...
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub class_load: BTreeMap<String, f64>,
    /// Per-class arrival rates in requests per second; win over loads.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rates: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub model: BamModel,
    pub observed_link: String,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(default)]
    pub paths: PathsSpec,
    pub topology: TopologyRef,
    pub workload: WorkloadFile,
    pub classes: Vec<ClassEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub users: Vec<UserEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<LinkOverride>,
    pub phases: Vec<PhaseEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserEntry {
    pub id: u64,
    pub name: String,
    pub class: u32,
}

fn invalid(msg: impl Into<String>) -> IoError {
    IoError::Validation(msg.into())
}

fn parse_link(s: &str) -> Result<LinkId, IoError> {
    s.parse().map_err(invalid)
}

fn parse_class(s: &str) -> Result<ClassId, IoError> {
    s.parse().map_err(invalid)
}

fn ms_from_s(s: f64, what: &str) -> Result<u64, IoError> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(invalid(format!("{what}: {s} s is not a valid duration")));
    }
    Ok((s * 1000.0).round() as u64)
}

fn build_graph(topo: &TopologyFile) -> Result<NetworkGraph, IoError> {
    let default = topo.capacity_mbps.map(Bandwidth::from_mbps_f64);
    let mut links: BTreeMap<LinkId, Bandwidth> = BTreeMap::new();
    for &[a, b] in &topo.edges {
        let cap = default.ok_or_else(|| invalid("topology edges need capacity_mbps"))?;
        for id in [LinkId::new(a, b), LinkId::new(b, a)] {
            if links.insert(id, cap).is_some() {
                return Err(invalid(format!("topology lists link {id} twice")));
            }
        }
    }
    for l in &topo.links {
        let id = parse_link(&l.link)?;
        let cap = match (l.capacity_kbps, l.capacity_mbps) {
            (Some(k), None) => Bandwidth::from_kbps(k),
            (None, Some(m)) => Bandwidth::from_mbps_f64(m),
            (None, None) => default.ok_or_else(|| invalid(format!("link {id} has no capacity")))?,
            (Some(_), Some(_)) => {
                return Err(invalid(format!("link {id} gives capacity twice")));
            }
        };
        if links.insert(id, cap).is_some() {
            return Err(invalid(format!("topology lists link {id} twice")));
        }
    }
    Ok(NetworkGraph::new(0..topo.switches, links)?)
}

fn class_bc(c: &ClassEntry, capacity: Bandwidth) -> Result<Bandwidth, IoError> {
    match (c.bc_percent, c.bc_mbps, c.bc_kbps) {
        (Some(p), None, None) if p.is_finite() && p >= 0.0 => {
            Ok(Bandwidth::from_kbps((capacity.kbps() as f64 * p / 100.0).round() as u64))
        }
        (None, Some(m), None) if m.is_finite() && m >= 0.0 => Ok(Bandwidth::from_mbps_f64(m)),
        (None, None, Some(k)) => Ok(Bandwidth::from_kbps(k)),
        _ => Err(invalid(format!(
            "class TC{} needs exactly one non-negative bc_percent, bc_mbps or bc_kbps",
            c.id
        ))),
    }
}

fn class_table(
    entries: &[ClassEntry],
    capacity: Bandwidth,
) -> Result<Vec<TrafficClassConfig>, IoError> {
    entries
        .iter()
        .map(|c| {
            Ok(TrafficClassConfig::new(
                c.id,
                c.priority,
                class_bc(c, capacity)?,
                c.sharing_percent / 100.0,
            ))
        })
        .collect()
}

fn resolve_topology(
    topo: &TopologyRef,
    base: Option<&Path>,
) -> Result<TopologyFile, IoError> {
    match topo {
        TopologyRef::Inline(t) => Ok(t.clone()),
        TopologyRef::File(name) => {
            let local = base.map(|b| b.join(name));
            let text = match local.as_ref().filter(|p| p.exists()) {
                Some(p) => std::fs::read_to_string(p).map_err(|e| IoError::io(p, e))?,
                None => bundled(name)
                    .ok_or_else(|| invalid(format!("topology `{name}` not found")))?
                    .to_string(),
            };
            toml::from_str(&text).map_err(|e| IoError::Parse {
                file: name.clone(),
                message: e.to_string(),
            })
        }
    }
}

impl ScenarioFile {
    /// Resolves and validates the file into a runnable scenario. `base` is
    /// the directory relative topology paths are looked up in.
    pub fn into_scenario(self, base: Option<&Path>) -> Result<Scenario, IoError> {
        let topo = resolve_topology(&self.topology, base)?;
        let graph = build_graph(&topo)?;

        let overrides: BTreeMap<LinkId, &LinkOverride> = self
            .links
            .iter()
            .map(|o| Ok((parse_link(&o.link)?, o)))
            .collect::<Result<_, IoError>>()?;
        for id in overrides.keys() {
            if !graph.contains(*id) {
                return Err(invalid(format!("override for unknown link {id}")));
            }
        }
        let mut links = Vec::new();
        for (id, capacity) in graph.links() {
            let o = overrides.get(&id);
            let entries = o.and_then(|o| o.classes.as_deref()).unwrap_or(&self.classes);
            let config = LinkBamConfig {
                link: id,
                model: o.and_then(|o| o.model).unwrap_or(self.model),
                classes: class_table(entries, capacity)?,
            };
            links.push(validate_link_config(&config, capacity)?);
        }

        let paths = match &self.paths {
            PathsSpec::Directive(d) if d == SHORTEST_HOP => PathTable::shortest_hop(&graph),
            PathsSpec::Directive(d) => {
                return Err(invalid(format!("unknown paths directive `{d}`")));
            }
            PathsSpec::Explicit(entries) => {
                let mut table = Vec::new();
                for e in entries {
                    if e.hops.len() < 2 {
                        return Err(invalid("a path needs at least two hops"));
                    }
                    let links = e.hops.windows(2).map(|w| LinkId::new(w[0], w[1])).collect();
                    table.push((e.hops[0], *e.hops.last().unwrap(), links));
                }
                PathTable::new(&graph, table)?
            }
        };

        let observed_link = parse_link(&self.observed_link)?;
        let observed: &ValidatedConfig = links
            .iter()
            .find(|c| c.link() == observed_link)
            .ok_or_else(|| invalid(format!("observed link {observed_link} is not in the topology")))?;

        let demand = match (self.workload.demand_mbps, self.workload.demand_kbps) {
            (Some([lo, hi]), None) => DemandRange {
                low: Bandwidth::from_mbps_f64(lo),
                high: Bandwidth::from_mbps_f64(hi),
            },
            (None, Some([lo, hi])) => DemandRange {
                low: Bandwidth::from_kbps(lo),
                high: Bandwidth::from_kbps(hi),
            },
            _ => return Err(invalid("workload needs exactly one of demand_mbps, demand_kbps")),
        };
        let hold = self.workload.mean_holding_s;
        // Offered load in kbps·s per arrival.
        let per_arrival = demand.mean() * 1000.0 * hold;

        if self.phases.is_empty() {
            return Err(IoError::Parse {
                file: self.name.clone(),
                message: "`phases` must list at least one phase".into(),
            });
        }
        let mut phases = Vec::new();
        for (i, p) in self.phases.iter().enumerate() {
            let what = format!("phase {}", i + 1);
            let duration_ms = match (p.duration_s, p.duration_ms) {
                (Some(s), None) => ms_from_s(s, &what)?,
                (None, Some(ms)) => ms,
                _ => return Err(invalid(format!("{what} needs exactly one of duration_s, duration_ms"))),
            };
            let mut rates = BTreeMap::new();
            for c in observed.classes() {
                let m = p.class_load.get(&c.class.to_string()).copied().or(p.load);
                if let Some(m) = m {
                    rates.insert(c.class, m * c.bc.kbps() as f64 / per_arrival);
                }
            }
            for key in p.class_load.keys() {
                let class = parse_class(key)?;
                if observed.class(class).is_none() {
                    return Err(invalid(format!("{what}: unknown class {key}")));
                }
            }
            for (key, &r) in &p.rates {
                rates.insert(parse_class(key)?, r);
            }
            phases.push(PhaseProfile {
                label: p.label.clone(),
                duration_ms,
                rates,
            });
        }

        let scenario = Scenario {
            name: self.name,
            description: self.description,
            links,
            paths,
            classes: self
                .classes
                .iter()
                .map(|c| ClassSpec {
                    id: ClassId(c.id),
                    name: c.name.clone(),
                    traffic: c.traffic.clone(),
                })
                .collect(),
            users: self
                .users
                .iter()
                .map(|u| UserSpec {
                    id: u.id,
                    name: u.name.clone(),
                    class: ClassId(u.class),
                })
                .collect(),
            flows: self.workload.flows.iter().map(|&[a, b]| (a, b)).collect(),
            phases,
            demand,
            mean_holding_s: hold,
            seeds: self.seeds,
            observed_link,
            graph,
        };
        if let Some(s) = self.duration_s {
            if ms_from_s(s, "duration")? != scenario.duration_ms() {
                return Err(invalid(format!(
                    "duration {s} s differs from the sum of phase durations ({} ms)",
                    scenario.duration_ms()
                )));
            }
        }
        for u in &scenario.users {
            if !scenario.classes.iter().any(|c| c.id == u.class) {
                return Err(invalid(format!("user `{}` maps to unknown class {}", u.name, u.class)));
            }
        }
        scenario
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        Ok(scenario)
    }
}

pub fn parse_scenario_str(text: &str, file: &str, base: Option<&Path>) -> Result<Scenario, IoError> {
    let parsed: ScenarioFile = toml::from_str(text).map_err(|e| IoError::Parse {
        file: file.to_string(),
        message: e.to_string(),
    })?;
    parsed.into_scenario(base)
}

/// Reads a scenario file. Names of bundled scenarios (`scenario1.toml`)
/// resolve to the shipped copies when no such file exists on disk.
pub fn parse_scenario(path: &Path) -> Result<Scenario, IoError> {
    let name = path.display().to_string();
    if !path.exists() {
        if let Some(text) = bundled(&name) {
            return parse_scenario_str(text, &name, None);
        }
    }
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let base: Option<PathBuf> = path.parent().map(Path::to_path_buf);
    parse_scenario_str(&text, &name, base.as_deref())
}

fn class_entries(config: &ValidatedConfig, specs: &[ClassSpec]) -> Vec<ClassEntry> {
    config
        .classes()
        .iter()
        .map(|c| {
            let spec = specs.iter().find(|s| s.id == c.class);
            ClassEntry {
                id: c.class.0,
                name: spec.map(|s| s.name.clone()).unwrap_or_default(),
                traffic: spec.map(|s| s.traffic.clone()).unwrap_or_default(),
                priority: c.priority,
                bc_percent: None,
                bc_mbps: None,
                bc_kbps: Some(c.bc.kbps()),
                sharing_percent: c.sharing_limit * 100.0,
            }
        })
        .collect()
}

/// Canonical form of a scenario: inline topology, absolute BCs, explicit
/// per-class rates. Parsing the result yields an equal scenario.
pub fn to_file(scenario: &Scenario) -> ScenarioFile {
    let observed = scenario
        .link_config(scenario.observed_link)
        .expect("observed link is configured");
    let classes = class_entries(observed, &scenario.classes);
    let links = scenario
        .links
        .iter()
        .filter_map(|c| {
            let own = class_entries(c, &scenario.classes);
            let model = (c.model() != observed.model()).then_some(c.model());
            let classes = (own != classes).then_some(own);
            (model.is_some() || classes.is_some()).then(|| LinkOverride {
                link: c.link().to_string(),
                model,
                classes,
            })
        })
        .collect();
    let paths = if scenario.paths == PathTable::shortest_hop(&scenario.graph) {
        PathsSpec::default()
    } else {
        PathsSpec::Explicit(
            scenario
                .paths
                .iter()
                .map(|(s, _, segs)| PathEntry {
                    hops: std::iter::once(s).chain(segs.iter().map(|g| g.to)).collect(),
                })
                .collect(),
        )
    };
    ScenarioFile {
        name: scenario.name.clone(),
        description: scenario.description.clone(),
        model: observed.model(),
        observed_link: scenario.observed_link.to_string(),
        seeds: scenario.seeds.clone(),
        duration_s: None,
        paths,
        topology: TopologyRef::Inline(TopologyFile {
            name: String::new(),
            switches: scenario.graph.switches().iter().max().map_or(0, |m| m + 1),
            edges: Vec::new(),
            capacity_mbps: None,
            links: scenario
                .graph
                .links()
                .map(|(id, cap)| TopologyLink {
                    link: id.to_string(),
                    capacity_mbps: None,
                    capacity_kbps: Some(cap.kbps()),
                })
                .collect(),
        }),
        workload: WorkloadFile {
            demand_mbps: None,
            demand_kbps: Some([scenario.demand.low.kbps(), scenario.demand.high.kbps()]),
            mean_holding_s: scenario.mean_holding_s,
            flows: scenario.flows.iter().map(|&(a, b)| [a, b]).collect(),
        },
        classes,
        users: scenario
            .users
            .iter()
            .map(|u| UserEntry {
                id: u.id,
                name: u.name.clone(),
                class: u.class.0,
            })
            .collect(),
        links,
        phases: scenario
            .phases
            .iter()
            .map(|p| PhaseEntry {
                label: p.label.clone(),
                duration_s: None,
                duration_ms: Some(p.duration_ms),
                load: None,
                class_load: BTreeMap::new(),
                rates: p.rates.iter().map(|(c, r)| (c.to_string(), *r)).collect(),
            })
            .collect(),
    }
}

pub fn emit_scenario(scenario: &Scenario) -> String {
    toml::to_string(&to_file(scenario)).expect("scenario file serializes")
}
