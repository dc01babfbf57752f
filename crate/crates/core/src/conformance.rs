//! Traffic-management conformance checks.
//!
//! * Exceptionality: every devolution or preemption was triggered by an
//!   arrival that could not otherwise be served on the contested link.
//!   Checked by replaying the log's donor breakdowns on a ledger kept
//!   independently of the admission engine.
//! * Non-discrimination: two requests that differ only in identity (user,
//!   request id, timing, endpoints) get the same decision from the same
//!   state.
//! * Proportionality: a model's utilization stays close to FRFS on the same
//!   trace while blocking no more.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bam::AdmissionEngine;
use crate::metrics::{average, summarize, ModelAverage};
use crate::model::{
    partition, BamModel, Bandwidth, Breakdown, ClassId, LinkId, LspRequest, RequestId,
    ValidatedConfig,
};
use crate::sim::{DemandRange, EventKind, EventLog, EventRecord, Scenario};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConformanceError {
    #[error("event log is inconsistent at record {index}: {detail}")]
    CorruptLog { index: usize, detail: String },
    #[error("runs being compared were not driven by the same arrivals (seed {seed})")]
    TraceMismatch { seed: u64 },
    #[error("nothing to compare")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Requirement {
    Exceptionality,
    NonDiscrimination,
    Proportionality,
}

impl Requirement {
    pub fn name(self) -> &'static str {
        match self {
            Requirement::Exceptionality => "exceptionality",
            Requirement::NonDiscrimination => "non-discrimination",
            Requirement::Proportionality => "proportionality",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub requirement: Requirement,
    pub passed: bool,
    /// Number of individual cases examined.
    pub checked: usize,
    pub counterexamples: Vec<String>,
}

impl Verdict {
    fn new(requirement: Requirement, checked: usize, counterexamples: Vec<String>) -> Self {
        Verdict {
            requirement,
            passed: counterexamples.is_empty(),
            checked,
            counterexamples,
        }
    }
}

/// Ledger of one link rebuilt from logged breakdowns.
struct ReplayLink {
    config: ValidatedConfig,
    lsps: BTreeMap<RequestId, (ClassId, Breakdown)>,
}

impl ReplayLink {
    fn drawn(&self, donor: ClassId) -> u64 {
        self.lsps
            .values()
            .flat_map(|(_, b)| b.iter())
            .filter(|s| s.donor == donor)
            .map(|s| s.amount.kbps())
            .sum()
    }

    fn lent(&self, donor: ClassId) -> u64 {
        self.lsps
            .values()
            .filter(|(c, _)| *c != donor)
            .flat_map(|(_, b)| b.iter())
            .filter(|s| s.donor == donor)
            .map(|s| s.amount.kbps())
            .sum()
    }

    /// What `class` could obtain without reclaiming anything.
    fn available(&self, class: ClassId) -> Option<u64> {
        let model = self.config.model();
        if model == BamModel::Frfs {
            let used: u64 = self.config.classes().iter().map(|c| self.drawn(c.class)).sum();
            return Some(self.config.capacity().kbps().saturating_sub(used));
        }
        let own = self.config.class(class)?;
        let mut total = own.bc.kbps().saturating_sub(self.drawn(class));
        for donor in self.config.classes() {
            if donor.class == class || !model.may_borrow(own.priority, donor.priority) {
                continue;
            }
            let (_, public) = partition(donor);
            let by_share = public.kbps().saturating_sub(self.lent(donor.class));
            let by_bc = donor.bc.kbps().saturating_sub(self.drawn(donor.class));
            total += by_share.min(by_bc);
        }
        Some(total)
    }
}

struct Replay {
    links: BTreeMap<LinkId, ReplayLink>,
    /// Links each active LSP holds bandwidth on.
    active: BTreeMap<RequestId, Vec<LinkId>>,
}

impl Replay {
    fn new(scenario: &Scenario) -> Self {
        let links = scenario
            .links
            .iter()
            .map(|c| {
                (
                    c.link(),
                    ReplayLink {
                        config: c.clone(),
                        lsps: BTreeMap::new(),
                    },
                )
            })
            .collect();
        Replay {
            links,
            active: BTreeMap::new(),
        }
    }

    fn apply(&mut self, r: &EventRecord) -> Result<(), String> {
        match r.kind {
            EventKind::Arrival | EventKind::Block => Ok(()),
            EventKind::Accept => {
                if r.breakdown.len() != r.links.len() {
                    return Err("accept without one breakdown per link".into());
                }
                if self.active.contains_key(&r.request) {
                    return Err(format!("request {} accepted twice", r.request));
                }
                for (link, b) in r.links.iter().zip(&r.breakdown) {
                    let total: Bandwidth = b.iter().map(|s| s.amount).sum();
                    if total != r.bandwidth {
                        return Err(format!("breakdown on {link} does not sum to demand"));
                    }
                    self.link(*link)?.lsps.insert(r.request, (r.class, b.clone()));
                }
                self.active.insert(r.request, r.links.clone());
                Ok(())
            }
            EventKind::Devolution => {
                let (Some(link), Some(b)) = (r.links.first(), r.breakdown.first()) else {
                    return Err("devolution without link or breakdown".into());
                };
                let entry = self
                    .link(*link)?
                    .lsps
                    .get_mut(&r.request)
                    .ok_or_else(|| format!("devolution of unknown LSP {}", r.request))?;
                entry.1 = b.clone();
                Ok(())
            }
            EventKind::Release | EventKind::Preemption => {
                let links = self
                    .active
                    .remove(&r.request)
                    .ok_or_else(|| format!("{} of unknown LSP {}", r.kind, r.request))?;
                for link in links {
                    self.link(link)?.lsps.remove(&r.request);
                }
                Ok(())
            }
        }
    }

    fn link(&mut self, link: LinkId) -> Result<&mut ReplayLink, String> {
        self.links
            .get_mut(&link)
            .ok_or_else(|| format!("link {link} is not configured"))
    }
}

/// Checks that every block and each group of reclaims (same cause and
/// contested link) was forced: at that moment the arriving request could
/// not be served from its own free BC plus borrowable public shares on the
/// link in question.
pub fn check_exceptionality(
    log: &EventLog,
    scenario: &Scenario,
) -> Result<Verdict, ConformanceError> {
    let mut replay = Replay::new(scenario);
    let mut arrivals: BTreeMap<RequestId, (ClassId, Bandwidth, u64)> = BTreeMap::new();
    let mut group: Option<(RequestId, LinkId)> = None;
    let mut checked = 0;
    let mut bad = Vec::new();

    for (index, r) in log.iter().enumerate() {
        let corrupt = |detail: String| ConformanceError::CorruptLog { index, detail };
        if r.kind == EventKind::Arrival {
            arrivals.insert(r.request, (r.class, r.bandwidth, r.time_ms));
        }
        if matches!(r.kind, EventKind::Devolution | EventKind::Preemption) {
            let (Some(cause), Some(site)) = (r.cause, r.site) else {
                return Err(corrupt("reclaim without cause or site".into()));
            };
            if group != Some((cause, site)) {
                group = Some((cause, site));
                checked += 1;
                let Some(&(class, demand, at)) = arrivals.get(&cause) else {
                    return Err(corrupt(format!("reclaim caused by unknown request {cause}")));
                };
                let link = replay.link(site).map_err(corrupt)?;
                let available = link.available(class).ok_or_else(|| {
                    corrupt(format!("class {class} is not configured on {site}"))
                })?;
                if at != r.time_ms {
                    bad.push(format!(
                        "t={} ms: {} of LSP {} caused by request {cause} that arrived at {at} ms",
                        r.time_ms, r.kind, r.request
                    ));
                } else if available >= demand.kbps() {
                    bad.push(format!(
                        "t={} ms: {} of LSP {} ({}) on {site} for request {cause} ({class}, {}) \
                         although {} was available",
                        r.time_ms,
                        r.kind,
                        r.request,
                        r.class,
                        demand,
                        Bandwidth::from_kbps(available)
                    ));
                }
            }
        } else {
            group = None;
        }
        if r.kind == EventKind::Block {
            let Some(site) = r.site else {
                return Err(corrupt("block without site".into()));
            };
            checked += 1;
            let link = replay.link(site).map_err(corrupt)?;
            let available = link
                .available(r.class)
                .ok_or_else(|| corrupt(format!("class {} is not configured on {site}", r.class)))?;
            if available >= r.bandwidth.kbps() {
                bad.push(format!(
                    "t={} ms: request {} ({}, {}) blocked on {site} although {} was available",
                    r.time_ms,
                    r.request,
                    r.class,
                    r.bandwidth,
                    Bandwidth::from_kbps(available)
                ));
            }
        }
        replay.apply(r).map_err(|d| ConformanceError::CorruptLog { index, detail: d })?;
    }
    Ok(Verdict::new(Requirement::Exceptionality, checked, bad))
}

/// Drives a copy of `engine` through a random walk of arrivals and
/// releases. At each arrival, two requests of the same class and demand
/// that differ in every identity field are offered to separate clones of
/// the current state; their outcomes and side effects must match. The walk
/// then continues from the first clone.
pub fn check_non_discrimination<E: AdmissionEngine>(
    engine: &E,
    classes: &[ClassId],
    demand: DemandRange,
    probes: usize,
    seed: u64,
) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = engine.clone();
    let mut active: Vec<RequestId> = Vec::new();
    let mut next_id: RequestId = 1 << 40;
    let mut bad = Vec::new();
    let link = engine.link();

    for probe in 0..probes {
        if classes.is_empty() {
            break;
        }
        while !active.is_empty() && rng.random_bool(0.4) {
            let id = active.swap_remove(rng.random_range(0..active.len()));
            state.release(id).expect("walk releases only active LSPs");
        }
        let class = classes[rng.random_range(0..classes.len())];
        let amount = Bandwidth::from_kbps(rng.random_range(demand.low.kbps()..=demand.high.kbps()));
        let mut a = LspRequest::on_link(next_id, class.0, amount, link);
        a.user = rng.random();
        a.arrival_ms = rng.random_range(0..1 << 30);
        a.holding_ms = rng.random_range(1..1 << 30);
        let mut b = LspRequest::on_link(next_id + 1, class.0, amount, link);
        b.user = a.user.wrapping_add(1 + rng.random_range(0..1000));
        b.arrival_ms = rng.random_range(0..1 << 30);
        b.holding_ms = rng.random_range(1..1 << 30);
        b.source = a.source.wrapping_add(100);
        b.destination = a.destination.wrapping_add(100);
        next_id += 2;

        let mut first = state.clone();
        let mut second = state.clone();
        let da = first.admit(&a).expect("probe is well formed");
        let db = second.admit(&b).expect("probe is well formed");
        let same = da.outcome == db.outcome && da.side_effects == db.side_effects;
        if !same && bad.len() < 10 {
            bad.push(format!(
                "probe {probe}: {class} {amount} for user {} got {:?}, for user {} got {:?}",
                a.user, da.outcome, b.user, db.outcome
            ));
        }
        if da.is_accepted() {
            for ev in &da.side_effects {
                if ev.is_preemption() {
                    active.retain(|&id| id != ev.victim);
                }
            }
            active.push(a.id);
        }
        state = first;
    }
    Verdict::new(Requirement::NonDiscrimination, probes, bad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassComparison {
    pub class: ClassId,
    pub utilization: f64,
    pub frfs_utilization: f64,
    pub block_rate: Option<f64>,
    pub frfs_block_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionalityReport {
    pub model: ModelAverage,
    pub frfs: ModelAverage,
    pub classes: Vec<ClassComparison>,
    /// Mean utilization of the model minus that of FRFS, in percentage points.
    pub utilization_gap: f64,
    pub band: f64,
    pub verdict: Verdict,
}

/// Compares a model against FRFS run on the same traces, one pair of logs
/// per seed. Passes when mean utilization is within `band` percentage
/// points of FRFS and the mean block rate does not exceed FRFS's.
pub fn compare_proportionality(
    scenario: &Scenario,
    runs: &[(EventLog, EventLog)],
    band: f64,
) -> Result<ProportionalityReport, ConformanceError> {
    if runs.is_empty() {
        return Err(ConformanceError::Empty);
    }
    for (m, f) in runs {
        if m.header.seed != f.header.seed || m.arrivals() != f.arrivals() {
            return Err(ConformanceError::TraceMismatch { seed: m.header.seed });
        }
    }
    let model_scenario = scenario.clone();
    let frfs_scenario = scenario.with_model(BamModel::Frfs);
    let model: Vec<_> = runs.iter().map(|(m, _)| summarize(m, &model_scenario)).collect();
    let frfs: Vec<_> = runs.iter().map(|(_, f)| summarize(f, &frfs_scenario)).collect();
    let model = average(&model);
    let frfs = average(&frfs);

    let classes: Vec<ClassComparison> = model
        .classes
        .iter()
        .map(|c| {
            let f = frfs.class(c.class);
            ClassComparison {
                class: c.class,
                utilization: c.utilization,
                frfs_utilization: f.map_or(0.0, |f| f.utilization),
                block_rate: c.block_rate,
                frfs_block_rate: f.and_then(|f| f.block_rate),
            }
        })
        .collect();
    let gap = model.mean_utilization - frfs.mean_utilization;
    let mut bad = Vec::new();
    if gap.abs() > band {
        bad.push(format!(
            "mean utilization {:.2}% vs FRFS {:.2}% differs by {:.2} pp (band {band} pp)",
            model.mean_utilization, frfs.mean_utilization, gap
        ));
    }
    let block = model.mean_block_rate.unwrap_or(0.0);
    let frfs_block = frfs.mean_block_rate.unwrap_or(0.0);
    if block > frfs_block + 1e-9 {
        bad.push(format!(
            "mean block rate {block:.2}% exceeds FRFS {frfs_block:.2}%"
        ));
    }
    Ok(ProportionalityReport {
        verdict: Verdict::new(Requirement::Proportionality, runs.len(), bad),
        model,
        frfs,
        classes,
        utilization_gap: gap,
        band,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub scenario: String,
    pub model: String,
    pub seeds: Vec<u64>,
    pub exceptionality: Verdict,
    pub non_discrimination: Verdict,
    pub proportionality: Option<ProportionalityReport>,
}

impl ConformanceReport {
    pub fn passed(&self) -> bool {
        self.exceptionality.passed
            && self.non_discrimination.passed
            && self.proportionality.as_ref().is_none_or(|p| p.verdict.passed)
    }

    pub fn verdicts(&self) -> Vec<&Verdict> {
        let mut v = vec![&self.exceptionality, &self.non_discrimination];
        if let Some(p) = &self.proportionality {
            v.push(&p.verdict);
        }
        v
    }
}

/// Merges per-seed exceptionality verdicts.
pub fn merge(requirement: Requirement, verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
    let mut checked = 0;
    let mut bad = Vec::new();
    for v in verdicts {
        checked += v.checked;
        bad.extend(v.counterexamples);
    }
    Verdict::new(requirement, checked, bad)
}
