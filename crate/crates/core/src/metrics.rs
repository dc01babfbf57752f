//! Utilization, blocking and reclaim figures computed from an event log.
//!
//! Utilization of a class is the time average, over the window, of the
//! total demand of that class's LSPs crossing the observed link, divided by
//! the class's configured BC on that link. Under FRFS the class table is
//! kept only for this purpose. Percentages are in `[0, 100]` units; block
//! rates are `None` when a class offered nothing in the window.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{Bandwidth, ClassId, LinkId, RequestId};
use crate::sim::{EventKind, EventLog, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: ClassId,
    pub bc: Bandwidth,
    pub utilization: f64,
    pub offered: usize,
    pub accepted: usize,
    pub blocked: usize,
    pub block_rate: Option<f64>,
    pub preempted: usize,
    pub devolved: usize,
    /// Distinct preempted LSPs as a share of accepted LSPs.
    pub preemption_pct: Option<f64>,
    pub devolution_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics {
    pub start_ms: u64,
    pub end_ms: u64,
    pub classes: Vec<ClassMetrics>,
    /// Unweighted mean of the per-class utilizations.
    pub mean_utilization: f64,
    /// Unweighted mean of the defined per-class block rates.
    pub mean_block_rate: Option<f64>,
    /// Total occupancy over link capacity.
    pub link_utilization: f64,
    pub preemptions: usize,
    pub devolutions: usize,
    pub preemptions_per_hour: f64,
    pub devolutions_per_hour: f64,
    pub preemption_pct: Option<f64>,
    pub devolution_pct: Option<f64>,
}

impl WindowMetrics {
    pub fn class(&self, class: ClassId) -> Option<&ClassMetrics> {
        self.classes.iter().find(|c| c.class == class)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMetrics {
    pub phase: usize,
    pub label: String,
    pub metrics: WindowMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub scenario: String,
    pub model: String,
    pub seed: u64,
    pub link: LinkId,
    pub overall: WindowMetrics,
    pub phases: Vec<PhaseMetrics>,
}

/// Per-class counters of one time-series bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketClass {
    pub class: ClassId,
    pub utilization: f64,
    pub arrivals: usize,
    pub blocks: usize,
    pub preemptions: usize,
    pub devolutions: usize,
}

impl BucketClass {
    pub fn block_rate(&self) -> Option<f64> {
        pct(self.blocks, self.arrivals)
    }
}

/// One time-series bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub start_ms: u64,
    pub end_ms: u64,
    pub classes: Vec<BucketClass>,
    pub link_utilization: f64,
}

fn pct(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Occupancy of each class on one link, integrated over consecutive
/// windows `bounds[i]..bounds[i + 1]`, in kbps·ms.
fn occupancy_integrals(
    log: &EventLog,
    link: LinkId,
    classes: &[ClassId],
    bounds: &[u64],
) -> Vec<BTreeMap<ClassId, u128>> {
    let mut level: BTreeMap<ClassId, u64> = classes.iter().map(|&c| (c, 0)).collect();
    let mut out: Vec<BTreeMap<ClassId, u128>> = bounds
        .windows(2)
        .map(|_| classes.iter().map(|&c| (c, 0)).collect())
        .collect();
    let mut window = 0;
    let mut now = bounds.first().copied().unwrap_or(0);

    for r in log.iter() {
        let delta_up = match r.kind {
            EventKind::Accept => true,
            EventKind::Release | EventKind::Preemption => false,
            _ => continue,
        };
        if !r.links.contains(&link) {
            continue;
        }
        advance(r.time_ms, bounds, &level, &mut out, &mut window, &mut now);
        if let Some(l) = level.get_mut(&r.class) {
            if delta_up {
                *l += r.bandwidth.kbps();
            } else {
                *l -= r.bandwidth.kbps();
            }
        }
    }
    advance(u64::MAX, bounds, &level, &mut out, &mut window, &mut now);
    out
}

fn advance(
    to: u64,
    bounds: &[u64],
    level: &BTreeMap<ClassId, u64>,
    out: &mut [BTreeMap<ClassId, u128>],
    window: &mut usize,
    now: &mut u64,
) {
    while *window + 1 < bounds.len() && *now < to {
        let stop = to.min(bounds[*window + 1]);
        for (c, &l) in level {
            *out[*window].get_mut(c).unwrap() += l as u128 * (stop - *now) as u128;
        }
        *now = stop;
        if *now == bounds[*window + 1] {
            *window += 1;
        }
    }
}

struct LinkContext {
    link: LinkId,
    capacity: Bandwidth,
    bcs: Vec<(ClassId, Bandwidth)>,
}

fn context(scenario: &Scenario) -> LinkContext {
    let cfg = scenario
        .link_config(scenario.observed_link)
        .expect("observed link is configured");
    LinkContext {
        link: cfg.link(),
        capacity: cfg.capacity(),
        bcs: cfg.classes().iter().map(|c| (c.class, c.bc)).collect(),
    }
}

fn window_metrics(
    log: &EventLog,
    ctx: &LinkContext,
    start_ms: u64,
    end_ms: u64,
    occupancy: &BTreeMap<ClassId, u128>,
) -> WindowMetrics {
    let span = (end_ms - start_ms).max(1) as f64;
    let in_window = |t: u64| t >= start_ms && (t < end_ms || (t == end_ms && end_ms == start_ms));

    // Requests crossing the observed link that arrived in the window.
    let mut offered: BTreeMap<ClassId, BTreeSet<RequestId>> = BTreeMap::new();
    let mut accepted: BTreeMap<ClassId, usize> = BTreeMap::new();
    let mut blocked: BTreeMap<ClassId, usize> = BTreeMap::new();
    let mut preempted: BTreeMap<ClassId, BTreeSet<RequestId>> = BTreeMap::new();
    let mut devolved: BTreeMap<ClassId, BTreeSet<RequestId>> = BTreeMap::new();
    let mut preemptions = 0;
    let mut devolutions = 0;
    for r in log.iter().filter(|r| in_window(r.time_ms)) {
        match r.kind {
            EventKind::Arrival if r.links.contains(&ctx.link) => {
                offered.entry(r.class).or_default().insert(r.request);
            }
            EventKind::Accept if r.links.contains(&ctx.link) => {
                *accepted.entry(r.class).or_default() += 1;
            }
            EventKind::Block if r.links.contains(&ctx.link) => {
                *blocked.entry(r.class).or_default() += 1;
            }
            EventKind::Preemption if r.site == Some(ctx.link) => {
                preemptions += 1;
                preempted.entry(r.class).or_default().insert(r.request);
            }
            EventKind::Devolution if r.site == Some(ctx.link) => {
                devolutions += 1;
                devolved.entry(r.class).or_default().insert(r.request);
            }
            _ => {}
        }
    }

    let classes: Vec<ClassMetrics> = ctx
        .bcs
        .iter()
        .map(|&(class, bc)| {
            let occ = occupancy.get(&class).copied().unwrap_or(0) as f64;
            let utilization = if bc.is_zero() {
                0.0
            } else {
                100.0 * occ / (bc.kbps() as f64 * span)
            };
            let offered = offered.get(&class).map_or(0, |s| s.len());
            let accepted = accepted.get(&class).copied().unwrap_or(0);
            let blocked = blocked.get(&class).copied().unwrap_or(0);
            let preempted = preempted.get(&class).map_or(0, |s| s.len());
            let devolved = devolved.get(&class).map_or(0, |s| s.len());
            ClassMetrics {
                class,
                bc,
                utilization,
                offered,
                accepted,
                blocked,
                block_rate: pct(blocked, offered),
                preempted,
                devolved,
                preemption_pct: pct(preempted, accepted),
                devolution_pct: pct(devolved, accepted),
            }
        })
        .collect();

    let total: u128 = occupancy.values().sum();
    let hours = span / 3_600_000.0;
    let accepted_total: usize = classes.iter().map(|c| c.accepted).sum();
    WindowMetrics {
        start_ms,
        end_ms,
        mean_utilization: mean(classes.iter().map(|c| c.utilization)).unwrap_or(0.0),
        mean_block_rate: mean(classes.iter().filter_map(|c| c.block_rate)),
        link_utilization: 100.0 * total as f64 / (ctx.capacity.kbps() as f64 * span),
        preemptions,
        devolutions,
        preemptions_per_hour: preemptions as f64 / hours,
        devolutions_per_hour: devolutions as f64 / hours,
        preemption_pct: pct(
            classes.iter().map(|c| c.preempted).sum(),
            accepted_total,
        ),
        devolution_pct: pct(classes.iter().map(|c| c.devolved).sum(), accepted_total),
        classes,
    }
}

/// Whole-run and per-phase metrics for the scenario's observed link.
pub fn summarize(log: &EventLog, scenario: &Scenario) -> MetricsSummary {
    let ctx = context(scenario);
    let classes: Vec<ClassId> = ctx.bcs.iter().map(|b| b.0).collect();
    let bounds = scenario.phase_bounds();
    let end = *bounds.last().unwrap();

    let overall_occ = occupancy_integrals(log, ctx.link, &classes, &[0, end]);
    let overall = window_metrics(log, &ctx, 0, end, &overall_occ[0]);
    let phase_occ = occupancy_integrals(log, ctx.link, &classes, &bounds);
    let phases = scenario
        .phases
        .iter()
        .enumerate()
        .map(|(i, p)| PhaseMetrics {
            phase: i + 1,
            label: p.label.clone(),
            metrics: window_metrics(log, &ctx, bounds[i], bounds[i + 1], &phase_occ[i]),
        })
        .collect();

    MetricsSummary {
        scenario: log.header.scenario.clone(),
        model: log.header.model.clone(),
        seed: log.header.seed,
        link: ctx.link,
        overall,
        phases,
    }
}

/// Fixed-width buckets over the run; the last bucket may be shorter.
pub fn time_series(log: &EventLog, scenario: &Scenario, bucket_ms: u64) -> Vec<Bucket> {
    let ctx = context(scenario);
    let classes: Vec<ClassId> = ctx.bcs.iter().map(|b| b.0).collect();
    let end = scenario.duration_ms();
    let step = bucket_ms.max(1);
    let mut bounds: Vec<u64> = (0..end).step_by(step as usize).collect();
    bounds.push(end);
    let occ = occupancy_integrals(log, ctx.link, &classes, &bounds);

    let mut buckets: Vec<Bucket> = bounds
        .windows(2)
        .zip(occ)
        .map(|(w, occ)| {
            let span = (w[1] - w[0]).max(1) as f64;
            let total: u128 = occ.values().sum();
            Bucket {
                start_ms: w[0],
                end_ms: w[1],
                classes: ctx
                    .bcs
                    .iter()
                    .map(|&(class, bc)| BucketClass {
                        class,
                        utilization: 100.0 * occ[&class] as f64
                            / (bc.kbps().max(1) as f64 * span),
                        arrivals: 0,
                        blocks: 0,
                        preemptions: 0,
                        devolutions: 0,
                    })
                    .collect(),
                link_utilization: 100.0 * total as f64 / (ctx.capacity.kbps() as f64 * span),
            }
        })
        .collect();

    for r in log.iter() {
        let i = ((r.time_ms / step) as usize).min(buckets.len() - 1);
        let Some(c) = buckets[i].classes.iter_mut().find(|c| c.class == r.class) else {
            continue;
        };
        match r.kind {
            EventKind::Arrival if r.links.contains(&ctx.link) => c.arrivals += 1,
            EventKind::Block if r.links.contains(&ctx.link) => c.blocks += 1,
            EventKind::Preemption if r.site == Some(ctx.link) => c.preemptions += 1,
            EventKind::Devolution if r.site == Some(ctx.link) => c.devolutions += 1,
            _ => {}
        }
    }
    buckets
}

/// Per-class figures averaged over seeds, as reported in comparison tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAverage {
    pub class: ClassId,
    pub utilization: f64,
    pub block_rate: Option<f64>,
    pub preemption_pct: Option<f64>,
    pub devolution_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAverage {
    pub model: String,
    pub seeds: Vec<u64>,
    pub classes: Vec<ClassAverage>,
    pub mean_utilization: f64,
    pub mean_block_rate: Option<f64>,
    pub link_utilization: f64,
    pub preemption_pct: Option<f64>,
    pub devolution_pct: Option<f64>,
    pub preemptions_per_hour: f64,
    pub devolutions_per_hour: f64,
}

impl ModelAverage {
    pub fn class(&self, class: ClassId) -> Option<&ClassAverage> {
        self.classes.iter().find(|c| c.class == class)
    }
}

/// Averages whole-run metrics of several seeds of the same model. Each
/// per-class value is the mean over seeds where it is defined; the mean
/// columns are unweighted means of the per-class averages.
pub fn average(summaries: &[MetricsSummary]) -> ModelAverage {
    let first = summaries.first().expect("at least one summary");
    let windows: Vec<&WindowMetrics> = summaries.iter().map(|s| &s.overall).collect();
    let classes: Vec<ClassAverage> = first
        .overall
        .classes
        .iter()
        .map(|c| {
            let of = |f: fn(&ClassMetrics) -> Option<f64>| {
                mean(windows.iter().filter_map(|w| w.class(c.class).and_then(f)))
            };
            ClassAverage {
                class: c.class,
                utilization: of(|m| Some(m.utilization)).unwrap_or(0.0),
                block_rate: of(|m| m.block_rate),
                preemption_pct: of(|m| m.preemption_pct),
                devolution_pct: of(|m| m.devolution_pct),
            }
        })
        .collect();
    ModelAverage {
        model: first.model.clone(),
        seeds: summaries.iter().map(|s| s.seed).collect(),
        mean_utilization: mean(classes.iter().map(|c| c.utilization)).unwrap_or(0.0),
        mean_block_rate: mean(classes.iter().filter_map(|c| c.block_rate)),
        link_utilization: mean(windows.iter().map(|w| w.link_utilization)).unwrap_or(0.0),
        preemption_pct: mean(windows.iter().filter_map(|w| w.preemption_pct)),
        devolution_pct: mean(windows.iter().filter_map(|w| w.devolution_pct)),
        preemptions_per_hour: mean(windows.iter().map(|w| w.preemptions_per_hour)).unwrap_or(0.0),
        devolutions_per_hour: mean(windows.iter().map(|w| w.devolutions_per_hour)).unwrap_or(0.0),
        classes,
    }
}
