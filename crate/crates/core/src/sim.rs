//! Seeded discrete-event simulation of LSP arrivals and departures.
//!
//! Each class draws its arrivals from its own ChaCha8 stream
//! (`ChaCha8Rng::seed_from_u64(seed)` with `set_stream(class + 1)`), so
//! adding or re-rating one class never perturbs another's draws. Within a
//! phase, inter-arrival times are exponential with the phase's per-class
//! rate; demands are uniform over whole kbps in `[low, high]`; holding times
//! are exponential. The clock counts integer milliseconds and simultaneous
//! events run in scheduling order.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{summarize, MetricsSummary};
use crate::model::{
    BamModel, Bandwidth, Breakdown, ClassId, LinkId, LspRequest, NetworkGraph, RequestId,
    SwitchId, UserId, ValidatedConfig,
};
use crate::path::{Network, PathDecision, PathError, PathTable};

/// Recorded in every events file so results can be reproduced elsewhere.
pub const RNG_DESCRIPTION: &str =
    "ChaCha8Rng (rand_chacha 0.9), seed_from_u64(seed), set_stream(class_id + 1) per class";

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// A named user (or user group) mapped to a traffic class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSpec {
    pub id: UserId,
    pub name: String,
    pub class: ClassId,
}

/// Descriptive data of a traffic class used in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub id: ClassId,
    pub name: String,
    pub traffic: String,
}

/// Per-class arrival rates for one phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseProfile {
    pub label: String,
    pub duration_ms: u64,
    /// Mean arrivals per second, per class. Missing classes do not arrive.
    pub rates: BTreeMap<ClassId, f64>,
}

impl PhaseProfile {
    pub fn rate(&self, class: ClassId) -> f64 {
        self.rates.get(&class).copied().unwrap_or(0.0)
    }
}

/// Uniform LSP demand range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandRange {
    pub low: Bandwidth,
    pub high: Bandwidth,
}

impl DemandRange {
    pub fn mean(&self) -> f64 {
        (self.low.kbps() + self.high.kbps()) as f64 / 2000.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub graph: NetworkGraph,
    /// One validated config per configured link.
    pub links: Vec<ValidatedConfig>,
    pub paths: PathTable,
    pub classes: Vec<ClassSpec>,
    pub users: Vec<UserSpec>,
    /// Endpoint pairs requests are drawn from, uniformly.
    pub flows: Vec<(SwitchId, SwitchId)>,
    pub phases: Vec<PhaseProfile>,
    pub demand: DemandRange,
    pub mean_holding_s: f64,
    pub seeds: Vec<u64>,
    /// Link the headline metrics are reported for.
    pub observed_link: LinkId,
}

impl Scenario {
    pub fn duration_ms(&self) -> u64 {
        self.phases.iter().map(|p| p.duration_ms).sum()
    }

    pub fn link_config(&self, link: LinkId) -> Option<&ValidatedConfig> {
        self.links.iter().find(|c| c.link() == link)
    }

    /// Start of each phase in ms, plus the end of the run.
    pub fn phase_bounds(&self) -> Vec<u64> {
        let mut bounds = vec![0];
        for p in &self.phases {
            bounds.push(bounds.last().unwrap() + p.duration_ms);
        }
        bounds
    }

    /// 0-based index of the phase containing `time_ms`; the end of the run
    /// belongs to the last phase.
    pub fn phase_at(&self, time_ms: u64) -> usize {
        let bounds = self.phase_bounds();
        (1..bounds.len())
            .find(|&i| time_ms < bounds[i])
            .map_or(self.phases.len().saturating_sub(1), |i| i - 1)
    }

    /// The same scenario with every link running `model`.
    pub fn with_model(&self, model: BamModel) -> Scenario {
        Scenario {
            links: self.links.iter().map(|c| c.with_model(model)).collect(),
            ..self.clone()
        }
    }

    /// Model of the observed link.
    pub fn model(&self) -> BamModel {
        self.link_config(self.observed_link)
            .map_or(BamModel::Atcs, |c| c.model())
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScenario(m));
        if self.phases.is_empty() {
            return bad("no phases".into());
        }
        for (i, p) in self.phases.iter().enumerate() {
            if p.duration_ms == 0 {
                return bad(format!("phase {} has zero duration", i + 1));
            }
            for (c, &r) in &p.rates {
                if !(r.is_finite() && r >= 0.0) {
                    return bad(format!("phase {} rate for {c} is {r}", i + 1));
                }
            }
        }
        if self.demand.low.is_zero() || self.demand.low > self.demand.high {
            return bad(format!(
                "demand range [{}, {}] must satisfy 0 < low <= high",
                self.demand.low, self.demand.high
            ));
        }
        if !(self.mean_holding_s.is_finite() && self.mean_holding_s > 0.0) {
            return bad(format!("mean holding time {} s", self.mean_holding_s));
        }
        if self.flows.is_empty() {
            return bad("no flows".into());
        }
        if self.link_config(self.observed_link).is_none() {
            return bad(format!("observed link {} has no config", self.observed_link));
        }
        let offered: Vec<ClassId> = self
            .phases
            .iter()
            .flat_map(|p| p.rates.iter().filter(|(_, &r)| r > 0.0).map(|(&c, _)| c))
            .collect();
        for &(s, d) in &self.flows {
            let Some(path) = self.paths.get(s, d) else {
                return bad(format!("flow {s}->{d} has no path"));
            };
            for seg in path {
                let Some(cfg) = self.link_config(seg.link) else {
                    return bad(format!("link {} on flow {s}->{d} has no config", seg.link));
                };
                if let Some(c) = offered.iter().find(|&&c| cfg.class(c).is_none()) {
                    return bad(format!("class {c} is not configured on link {}", seg.link));
                }
            }
        }
        Ok(())
    }
}

/// Per-class arrivals of one phase, drawn from that class's stream.
pub fn generate_workload(
    scenario: &Scenario,
    phase_start_ms: u64,
    phase: &PhaseProfile,
    class: ClassId,
    rng: &mut ChaCha8Rng,
) -> Vec<LspRequest> {
    let rate = phase.rate(class);
    if rate <= 0.0 {
        return Vec::new();
    }
    let end_ms = phase_start_ms + phase.duration_ms;
    let gap = Exp::new(rate).expect("positive rate");
    let hold = Exp::new(1.0 / scenario.mean_holding_s).expect("positive holding time");
    let demand = Uniform::new_inclusive(scenario.demand.low.kbps(), scenario.demand.high.kbps())
        .expect("validated demand range");
    let users: Vec<UserId> = scenario
        .users
        .iter()
        .filter(|u| u.class == class)
        .map(|u| u.id)
        .collect();

    let mut out = Vec::new();
    let mut clock = phase_start_ms as f64;
    loop {
        clock += gap.sample(rng) * 1000.0;
        let arrival_ms = clock.round() as u64;
        if arrival_ms >= end_ms {
            break;
        }
        let demand = Bandwidth::from_kbps(demand.sample(rng));
        let holding_ms = ((hold.sample(rng) * 1000.0).round() as u64).max(1);
        let user = if users.is_empty() {
            0
        } else {
            users[rng.random_range(0..users.len())]
        };
        let (source, destination) = if scenario.flows.len() == 1 {
            scenario.flows[0]
        } else {
            scenario.flows[rng.random_range(0..scenario.flows.len())]
        };
        out.push(LspRequest {
            id: 0,
            user,
            class,
            demand,
            source,
            destination,
            arrival_ms,
            holding_ms,
        });
    }
    out
}

/// Complete request trace for a seed, ordered by arrival time, with request
/// ids assigned in that order starting from 1.
pub fn workload(scenario: &Scenario, seed: u64) -> Vec<LspRequest> {
    let mut classes: Vec<ClassId> = scenario
        .phases
        .iter()
        .flat_map(|p| p.rates.keys().copied())
        .collect();
    classes.sort();
    classes.dedup();

    let bounds = scenario.phase_bounds();
    let mut all = Vec::new();
    for class in classes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(class.0 as u64 + 1);
        for (i, phase) in scenario.phases.iter().enumerate() {
            all.extend(generate_workload(scenario, bounds[i], phase, class, &mut rng));
        }
    }
    all.sort_by_key(|r| (r.arrival_ms, r.class));
    for (i, r) in all.iter_mut().enumerate() {
        r.id = i as RequestId + 1;
    }
    all
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Arrival,
    Accept,
    Block,
    Devolution,
    Preemption,
    Release,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Arrival => "arrival",
            EventKind::Accept => "accept",
            EventKind::Block => "block",
            EventKind::Devolution => "devolution",
            EventKind::Preemption => "preemption",
            EventKind::Release => "release",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "arrival" => EventKind::Arrival,
            "accept" => EventKind::Accept,
            "block" => EventKind::Block,
            "devolution" => EventKind::Devolution,
            "preemption" => EventKind::Preemption,
            "release" => EventKind::Release,
            other => return Err(format!("unknown event kind `{other}`")),
        })
    }
}

/// One line of the event log.
///
/// * `Arrival`, `Accept`, `Block`, `Release`: `links` is the request's path,
///   `bandwidth` its demand.
/// * `Accept`: `breakdown` holds the donor breakdown per link of `links`.
/// * `Block`: `site` is the link that refused.
/// * `Devolution`: `request`/`class` name the victim, `bandwidth` the amount
///   moved off the contested constraint, `links` the single link, `breakdown`
///   the victim's new breakdown there.
/// * `Preemption`: `request`/`class` name the victim, `bandwidth` its demand,
///   `links` every link it was torn down on.
/// * Reclaims carry the admitting request in `cause` and the contested link
///   in `site`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time_ms: u64,
    pub kind: EventKind,
    pub request: RequestId,
    pub class: ClassId,
    pub bandwidth: Bandwidth,
    pub links: Vec<LinkId>,
    /// 1-based phase the event happened in.
    pub phase: usize,
    pub cause: Option<RequestId>,
    pub site: Option<LinkId>,
    pub breakdown: Vec<Breakdown>,
}

/// Run metadata written ahead of the records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogHeader {
    pub scenario: String,
    pub model: String,
    pub seed: u64,
    pub duration_ms: u64,
    pub rng: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    pub header: LogHeader,
    pub records: Vec<EventRecord>,
}

impl EventLog {
    pub fn iter(&self) -> impl Iterator<Item = &EventRecord> {
        self.records.iter()
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &EventRecord> {
        self.records.iter().filter(move |r| r.kind == kind)
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.of_kind(kind).count()
    }

    /// `(time, request, class, demand, path)` of every arrival, in order.
    pub fn arrivals(&self) -> Vec<(u64, RequestId, ClassId, Bandwidth, &[LinkId])> {
        self.of_kind(EventKind::Arrival)
            .map(|r| (r.time_ms, r.request, r.class, r.bandwidth, r.links.as_slice()))
            .collect()
    }

    /// Structural checks: times never decrease, no event after the end of
    /// the run, one arrival per request, and each accepted LSP ends exactly
    /// once (release or preemption) after its accept.
    pub fn check_structure(&self) -> Result<(), String> {
        #[derive(PartialEq)]
        enum Life {
            Arrived,
            Up,
            Done,
        }
        let mut life: BTreeMap<RequestId, Life> = BTreeMap::new();
        let mut last = 0;
        for (i, r) in self.records.iter().enumerate() {
            if r.time_ms < last {
                return Err(format!("record {i}: time goes backwards"));
            }
            if r.time_ms > self.header.duration_ms {
                return Err(format!("record {i}: event after the end of the run"));
            }
            last = r.time_ms;
            let state = life.get(&r.request);
            match r.kind {
                EventKind::Arrival if state.is_none() => {
                    life.insert(r.request, Life::Arrived);
                }
                EventKind::Accept | EventKind::Block if state == Some(&Life::Arrived) => {
                    let next = if r.kind == EventKind::Accept {
                        Life::Up
                    } else {
                        Life::Done
                    };
                    life.insert(r.request, next);
                }
                EventKind::Devolution if state == Some(&Life::Up) => {}
                EventKind::Release | EventKind::Preemption if state == Some(&Life::Up) => {
                    life.insert(r.request, Life::Done);
                }
                kind => {
                    return Err(format!(
                        "record {i}: unexpected {kind} for request {}",
                        r.request
                    ))
                }
            }
        }
        match life.iter().find(|(_, l)| **l != Life::Done) {
            Some((id, _)) => Err(format!("request {id} never finished")),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub log: EventLog,
    pub summary: MetricsSummary,
}

/// Runs one seed and summarizes it.
pub fn run(scenario: &Scenario, seed: u64) -> Result<SimOutput, SimError> {
    let log = simulate(scenario, seed, |_, _| {})?;
    let summary = summarize(&log, scenario);
    Ok(SimOutput { log, summary })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Pending {
    Arrival(usize),
    Departure(RequestId),
}

/// Runs one seed, calling `observe` after every record with the live
/// network state.
pub fn simulate(
    scenario: &Scenario,
    seed: u64,
    mut observe: impl FnMut(&EventRecord, &Network),
) -> Result<EventLog, SimError> {
    scenario.validate()?;
    let requests = workload(scenario, seed);
    let duration = scenario.duration_ms();
    let mut net = Network::new(scenario.links.iter().cloned(), scenario.paths.clone())?;

    let mut queue: BinaryHeap<Reverse<(u64, u64, Pending)>> = BinaryHeap::new();
    let mut seq = 0u64;
    for (i, r) in requests.iter().enumerate() {
        queue.push(Reverse((r.arrival_ms, seq, Pending::Arrival(i))));
        seq += 1;
    }

    let mut paths: BTreeMap<RequestId, (ClassId, Bandwidth, Vec<LinkId>)> = BTreeMap::new();
    let mut records = Vec::new();
    let mut emit = |rec: EventRecord, net: &Network, records: &mut Vec<EventRecord>| {
        debug_assert!(net.audit().is_ok(), "{:?}", net.audit());
        observe(&rec, net);
        records.push(rec);
    };

    while let Some(Reverse((time, _, event))) = queue.pop() {
        if time >= duration {
            break;
        }
        let phase = scenario.phase_at(time) + 1;
        match event {
            Pending::Arrival(i) => {
                let req = &requests[i];
                let path: Vec<LinkId> = scenario
                    .paths
                    .get(req.source, req.destination)
                    .map(|p| p.iter().map(|s| s.link).collect())
                    .unwrap_or_default();
                let base = EventRecord {
                    time_ms: time,
                    kind: EventKind::Arrival,
                    request: req.id,
                    class: req.class,
                    bandwidth: req.demand,
                    links: path.clone(),
                    phase,
                    cause: None,
                    site: None,
                    breakdown: Vec::new(),
                };
                emit(base.clone(), &net, &mut records);

                let decision = net.admit_path(req)?;
                for r in decision.reclaims() {
                    let victim = &r.event;
                    let rec = match &victim.kind {
                        crate::bam::ReclaimKind::Devolution { breakdown } => EventRecord {
                            time_ms: time,
                            kind: EventKind::Devolution,
                            request: victim.victim,
                            class: victim.victim_class,
                            bandwidth: victim.freed,
                            links: vec![r.link],
                            phase,
                            cause: Some(req.id),
                            site: Some(r.link),
                            breakdown: vec![breakdown.clone()],
                        },
                        crate::bam::ReclaimKind::Preemption => {
                            let (_, demand, _) = paths
                                .remove(&victim.victim)
                                .expect("preempted LSP was active");
                            EventRecord {
                                time_ms: time,
                                kind: EventKind::Preemption,
                                request: victim.victim,
                                class: victim.victim_class,
                                bandwidth: demand,
                                links: r.torn_down.clone(),
                                phase,
                                cause: Some(req.id),
                                site: Some(r.link),
                                breakdown: Vec::new(),
                            }
                        }
                    };
                    emit(rec, &net, &mut records);
                }
                match decision {
                    PathDecision::Accepted { allocation, .. } => {
                        paths.insert(req.id, (req.class, req.demand, path.clone()));
                        queue.push(Reverse((
                            time + req.holding_ms,
                            seq,
                            Pending::Departure(req.id),
                        )));
                        seq += 1;
                        let rec = EventRecord {
                            kind: EventKind::Accept,
                            breakdown: allocation.breakdowns,
                            ..base
                        };
                        emit(rec, &net, &mut records);
                    }
                    PathDecision::Blocked { site, .. } => {
                        let rec = EventRecord {
                            kind: EventKind::Block,
                            site: Some(site),
                            ..base
                        };
                        emit(rec, &net, &mut records);
                    }
                }
            }
            Pending::Departure(id) => {
                // Preempted LSPs have already left.
                let Some((class, demand, links)) = paths.remove(&id) else {
                    continue;
                };
                net.teardown_path(id)?;
                let rec = EventRecord {
                    time_ms: time,
                    kind: EventKind::Release,
                    request: id,
                    class,
                    bandwidth: demand,
                    links,
                    phase,
                    cause: None,
                    site: None,
                    breakdown: Vec::new(),
                };
                emit(rec, &net, &mut records);
            }
        }
    }

    // Close every LSP still up when the run halts.
    let last_phase = scenario.phases.len();
    for (id, (class, demand, links)) in std::mem::take(&mut paths) {
        net.teardown_path(id)?;
        let rec = EventRecord {
            time_ms: duration,
            kind: EventKind::Release,
            request: id,
            class,
            bandwidth: demand,
            links,
            phase: last_phase,
            cause: None,
            site: None,
            breakdown: Vec::new(),
        };
        emit(rec, &net, &mut records);
    }

    Ok(EventLog {
        header: LogHeader {
            scenario: scenario.name.clone(),
            model: scenario.model().to_string(),
            seed,
            duration_ms: duration,
            rng: RNG_DESCRIPTION.to_string(),
        },
        records,
    })
}
