//! Brute-force reference for single-link admission, written against the
//! allocation rules directly: no counters, every quantity recomputed from
//! the list of active LSPs, victim sets found by enumerating subsets.

#![allow(dead_code)]

use std::collections::BTreeMap;

use bwbroker_core::{
    validate_link_config, AdmitOutcome, BamModel, Bandwidth, LinkBamConfig, LinkId,
    LinkState, LspRequest, ReclaimKind, TrafficClassConfig,
};

pub const LINK: LinkId = LinkId::new(0, 1);

/// Donor index to amount, in plain units.
pub type Parts = BTreeMap<usize, u64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    Devolved { victim: u64, parts: Parts, freed: u64 },
    Preempted { victim: u64, freed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Accepted { parts: Parts, effects: Vec<Effect> },
    Blocked { available: u64 },
    Released { parts: Parts },
}

#[derive(Debug, Clone)]
struct Lsp {
    id: u64,
    class: usize,
    parts: Parts,
}

#[derive(Debug, Clone)]
pub struct Oracle {
    model: BamModel,
    capacity: u64,
    /// (priority, bc, public) by class index.
    classes: Vec<(u32, u64, u64)>,
    lsps: Vec<Lsp>,
}

impl Oracle {
    pub fn new(model: BamModel, capacity: u64, classes: &[(u32, u64, f64)]) -> Self {
        Oracle {
            model,
            capacity,
            classes: classes
                .iter()
                .map(|&(p, bc, s)| (p, bc, ((bc as f64) * s).round() as u64))
                .collect(),
            lsps: Vec::new(),
        }
    }

    fn prio(&self, k: usize) -> u32 {
        self.classes[k].0
    }

    fn drawn(&self, z: usize) -> u64 {
        self.lsps.iter().map(|l| l.parts.get(&z).copied().unwrap_or(0)).sum()
    }

    fn lent(&self, z: usize) -> u64 {
        self.lsps
            .iter()
            .filter(|l| l.class != z)
            .map(|l| l.parts.get(&z).copied().unwrap_or(0))
            .sum()
    }

    fn used(&self) -> u64 {
        self.lsps.iter().flat_map(|l| l.parts.values()).sum()
    }

    fn own_free(&self, k: usize) -> u64 {
        self.classes[k].1 - self.drawn(k)
    }

    fn public_free(&self, z: usize) -> u64 {
        (self.classes[z].2 - self.lent(z)).min(self.own_free(z))
    }

    /// Classes `k` may borrow from, lowest priority first.
    fn donors(&self, k: usize) -> Vec<usize> {
        let mut d: Vec<usize> = (0..self.classes.len())
            .filter(|&z| {
                z != k
                    && match self.model {
                        BamModel::Atcs => true,
                        BamModel::Rdm => self.prio(z) > self.prio(k),
                        BamModel::Mam | BamModel::Frfs => false,
                    }
            })
            .collect();
        d.sort_by_key(|&z| self.prio(z));
        d
    }

    fn available(&self, k: usize) -> u64 {
        if self.model == BamModel::Frfs {
            return self.capacity - self.used();
        }
        self.own_free(k) + self.donors(k).iter().map(|&z| self.public_free(z)).sum::<u64>()
    }

    fn plan(&self, k: usize, demand: u64, exclude: Option<usize>) -> Option<Parts> {
        let mut order = vec![k];
        order.extend(self.donors(k));
        let mut parts = Parts::new();
        let mut left = demand;
        for z in order {
            if left == 0 {
                break;
            }
            if Some(z) == exclude {
                continue;
            }
            let room = if z == k { self.own_free(k) } else { self.public_free(z) };
            let take = room.min(left);
            if take > 0 {
                parts.insert(z, take);
                left -= take;
            }
        }
        (left == 0).then_some(parts)
    }

    pub fn arrive(&mut self, id: u64, k: usize, demand: u64) -> Step {
        let direct = match self.model {
            BamModel::Frfs => (self.used() + demand <= self.capacity).then(|| Parts::from([(k, demand)])),
            BamModel::Mam => (self.own_free(k) >= demand).then(|| Parts::from([(k, demand)])),
            BamModel::Rdm | BamModel::Atcs => self.plan(k, demand, None),
        };
        if let Some(parts) = direct {
            self.lsps.push(Lsp { id, class: k, parts: parts.clone() });
            return Step::Accepted { parts, effects: Vec::new() };
        }
        let available = self.available(k);
        let lent = self.lent(k);
        let sharing = matches!(self.model, BamModel::Rdm | BamModel::Atcs);
        if !sharing || lent == 0 || available + lent < demand {
            return Step::Blocked { available };
        }
        let minimal = demand - available;
        let full = demand.saturating_sub(self.own_free(k));
        let mut attempts = vec![minimal];
        if full > minimal {
            attempts.push(full);
        }
        for needed in attempts {
            let mut trial = self.clone();
            let effects = trial.reclaim(k, needed);
            if let Some(parts) = trial.plan(k, demand, None) {
                trial.lsps.push(Lsp { id, class: k, parts: parts.clone() });
                *self = trial;
                return Step::Accepted { parts, effects };
            }
        }
        Step::Blocked { available }
    }

    pub fn release(&mut self, id: u64) -> Step {
        let i = self.lsps.iter().position(|l| l.id == id).expect("active");
        Step::Released { parts: self.lsps.remove(i).parts }
    }

    pub fn active(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.lsps.iter().map(|l| l.id).collect();
        ids.sort_unstable();
        ids
    }

    /// Borrowers in `k`'s constraint: lowest priority first, then latest
    /// admitted first. Ids grow with admission order.
    fn candidates(&self, k: usize) -> Vec<(u64, u64)> {
        let mut c: Vec<(u32, u64, u64)> = self
            .lsps
            .iter()
            .filter(|l| l.class != k && l.parts.get(&k).copied().unwrap_or(0) > 0)
            .map(|l| (self.prio(l.class), l.id, l.parts[&k]))
            .collect();
        c.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        c.into_iter().map(|(_, id, amt)| (id, amt)).collect()
    }

    fn reclaim(&mut self, k: usize, needed: u64) -> Vec<Effect> {
        let mut cands = self.candidates(k);
        loop {
            let mut trial = self.clone();
            let chosen = brute_force_victims(&cands.iter().map(|c| c.1).collect::<Vec<_>>(), needed);
            let mut effects = Vec::new();
            let mut stuck = None;
            for i in chosen {
                let (victim, contested) = cands[i];
                let pos = trial.lsps.iter().position(|l| l.id == victim).unwrap();
                let v = trial.lsps[pos].class;
                trial.lsps[pos].parts.remove(&k);
                match trial.plan(v, contested, Some(k)) {
                    Some(extra) => {
                        let parts = &mut trial.lsps[pos].parts;
                        for (z, a) in extra {
                            *parts.entry(z).or_insert(0) += a;
                        }
                        effects.push(Effect::Devolved { victim, parts: parts.clone(), freed: contested });
                    }
                    None if trial.prio(v) > trial.prio(k) => {
                        stuck = Some(victim);
                        break;
                    }
                    None => {
                        trial.lsps.remove(pos);
                        effects.push(Effect::Preempted { victim, freed: contested });
                    }
                }
            }
            match stuck {
                Some(s) => cands.retain(|c| c.0 != s),
                None => {
                    *self = trial;
                    return effects;
                }
            }
        }
    }

    /// `(drawn, lent)` per class.
    pub fn ledger(&self) -> Vec<(u64, u64)> {
        (0..self.classes.len()).map(|z| (self.drawn(z), self.lent(z))).collect()
    }
}

/// Smallest set of indices whose amounts reach `needed`, first in
/// lexicographic index order among sets of that size. All indices if the
/// total falls short.
pub fn brute_force_victims(amounts: &[u64], needed: u64) -> Vec<usize> {
    if amounts.iter().sum::<u64>() < needed {
        return (0..amounts.len()).collect();
    }
    for size in 0..=amounts.len() {
        let mut found = None;
        combinations(amounts.len(), size, &mut |set| {
            if found.is_none() && set.iter().map(|&i| amounts[i]).sum::<u64>() >= needed {
                found = Some(set.to_vec());
            }
        });
        if let Some(set) = found {
            return set;
        }
    }
    unreachable!("the full set covers `needed`")
}

/// Visits every `size`-subset of `0..n` in lexicographic order.
pub fn combinations(n: usize, size: usize, visit: &mut impl FnMut(&[usize])) {
    fn go(n: usize, size: usize, start: usize, cur: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if cur.len() == size {
            visit(cur);
            return;
        }
        for i in start..n {
            if n - i < size - cur.len() {
                break;
            }
            cur.push(i);
            go(n, size, i + 1, cur, visit);
            cur.pop();
        }
    }
    go(n, size, 0, &mut Vec::with_capacity(size), visit);
}

/// The engine under test for the same configuration, bandwidth in kbps.
pub fn engine(model: BamModel, capacity: u64, classes: &[(u32, u64, f64)]) -> LinkState {
    let cfg = LinkBamConfig {
        link: LINK,
        model,
        classes: classes
            .iter()
            .enumerate()
            .map(|(i, &(p, bc, s))| TrafficClassConfig::new(i as u32, p, Bandwidth::from_kbps(bc), s))
            .collect(),
    };
    LinkState::new(&validate_link_config(&cfg, Bandwidth::from_kbps(capacity)).expect("valid"))
}

fn parts_of(b: &[bwbroker_core::Share]) -> Parts {
    let mut p = Parts::new();
    for s in b {
        *p.entry(s.donor.0 as usize).or_insert(0) += s.amount.kbps();
    }
    p
}

/// Engine step translated into the oracle's vocabulary.
pub fn engine_arrive(s: &mut LinkState, id: u64, k: usize, demand: u64) -> Step {
    let d = s
        .admit(&LspRequest::on_link(id, k as u32, Bandwidth::from_kbps(demand), LINK))
        .expect("well-formed request");
    match d.outcome {
        AdmitOutcome::Blocked(r) => Step::Blocked { available: r.available.kbps() },
        AdmitOutcome::Accepted(parts) => Step::Accepted {
            parts: parts_of(&parts),
            effects: d
                .side_effects
                .iter()
                .map(|e| match &e.kind {
                    ReclaimKind::Devolution { breakdown } => Effect::Devolved {
                        victim: e.victim,
                        parts: parts_of(breakdown),
                        freed: e.freed.kbps(),
                    },
                    ReclaimKind::Preemption => Effect::Preempted { victim: e.victim, freed: e.freed.kbps() },
                })
                .collect(),
        },
    }
}

pub fn engine_release(s: &mut LinkState, id: u64) -> Step {
    Step::Released { parts: parts_of(&s.release(id).expect("active")) }
}

pub fn engine_ledger(s: &LinkState) -> Vec<(u64, u64)> {
    s.class_ids()
        .map(|c| {
            let u = s.used_bandwidth(c).unwrap();
            (s.drawn_from(c).unwrap().kbps(), u.lent.kbps())
        })
        .collect()
}

/// One operation of an exhaustive sequence.
#[derive(Debug, Clone, Copy)]
pub enum Op {
    Arrive { class: usize, demand: u64 },
    /// Release the oldest active LSP, if any.
    ReleaseOldest,
}

#[derive(Debug, Default)]
pub struct Exploration {
    pub steps: u64,
    /// Steps whose admission reclaimed bandwidth.
    pub reclaims: u64,
    pub divergence: Option<String>,
}

/// Walks every operation sequence up to `depth` over `ops`, stepping engine
/// and oracle side by side, and stops at the first divergence.
pub fn explore(
    model: BamModel,
    capacity: u64,
    classes: &[(u32, u64, f64)],
    ops: &[Op],
    depth: usize,
) -> Exploration {
    struct Walk<'a> {
        ops: &'a [Op],
        depth: usize,
        out: Exploration,
    }
    fn go(w: &mut Walk, eng: &LinkState, orc: &Oracle, next_id: u64, trail: &mut Vec<Op>) {
        if trail.len() == w.depth || w.out.divergence.is_some() {
            return;
        }
        for &op in w.ops {
            let mut e = eng.clone();
            let mut o = orc.clone();
            let (got, want) = match op {
                Op::Arrive { class, demand } => (
                    engine_arrive(&mut e, next_id, class, demand),
                    o.arrive(next_id, class, demand),
                ),
                Op::ReleaseOldest => match o.active().first() {
                    Some(&id) => (engine_release(&mut e, id), o.release(id)),
                    None => continue,
                },
            };
            w.out.steps += 1;
            if matches!(&want, Step::Accepted { effects, .. } if !effects.is_empty()) {
                w.out.reclaims += 1;
            }
            trail.push(op);
            let ledger_ok = engine_ledger(&e) == o.ledger();
            let audit = e.audit();
            if got != want || !ledger_ok || audit.is_err() {
                w.out.divergence = Some(format!(
                    "{:?} after {:?}: engine {:?}, oracle {:?}, ledger {:?} vs {:?}, audit {:?}",
                    e.model(),
                    trail,
                    got,
                    want,
                    engine_ledger(&e),
                    o.ledger(),
                    audit
                ));
                return;
            }
            let id = if matches!(op, Op::Arrive { .. }) { next_id + 1 } else { next_id };
            go(w, &e, &o, id, trail);
            trail.pop();
        }
    }
    let mut w = Walk { ops, depth, out: Exploration::default() };
    go(
        &mut w,
        &engine(model, capacity, classes),
        &Oracle::new(model, capacity, classes),
        1,
        &mut Vec::new(),
    );
    w.out
}

/// Arrival ops for every class at each listed demand, plus a release.
pub fn ops(classes: usize, demands: &[u64]) -> Vec<Op> {
    let mut v: Vec<Op> = (0..classes)
        .flat_map(|class| demands.iter().map(move |&demand| Op::Arrive { class, demand }))
        .collect();
    v.push(Op::ReleaseOldest);
    v
}

#[allow(clippy::type_complexity)]
/// Micro-instance class tables: `(capacity, [(priority, bc, sharing)])`.
pub fn micro_instances() -> Vec<(u64, Vec<(u32, u64, f64)>)> {
    let mut out = Vec::new();
    for (b0, b1) in [(1, 1), (1, 2), (2, 2), (2, 3), (3, 1)] {
        for s in [0.5, 1.0] {
            out.push((b0 + b1, vec![(0, b0, s), (1, b1, s)]));
            out.push((b0 + b1 + 1, vec![(1, b0, s), (0, b1, 1.0)]));
        }
    }
    for (b0, b1, b2) in [(1, 1, 1), (1, 2, 2), (2, 1, 2), (2, 2, 1), (3, 3, 4), (1, 1, 3)] {
        for s in [0.5, 1.0] {
            out.push((b0 + b1 + b2, vec![(0, b0, s), (1, b1, s), (2, b2, s)]));
        }
        out.push((b0 + b1 + b2, vec![(2, b0, 1.0), (0, b1, 0.5), (1, b2, 0.0)]));
        if (b0 + b1 + b2) * 4 <= 20 {
            out.push((20, vec![(0, b0 * 4, 1.0), (1, b1 * 4, 0.5), (2, b2 * 4, 1.0)]));
        }
    }
    out
}
