//! Per-link admission engines for MAM, RDM, ATCS and the FRFS baseline.
//!
//! All three bandwidth allocation models share one donor-tagged ledger: every
//! active LSP on the link records how much of its demand was drawn from each
//! class's bandwidth constraint. The models differ only in which donors a
//! class may draw on:
//!
//! * MAM: own constraint only.
//! * RDM: own constraint, then the public partition of strictly higher
//!   priority classes.
//! * ATCS: own constraint, then the public partition of every other class.
//!
//! Donors are scanned from the lowest priority upward. When a request does
//! not fit but other classes occupy its own constraint, those borrowers are
//! reclaimed: each victim is first devolved (its borrowed share re-housed in
//! bandwidth it may still legally use) and preempted only if that fails.
//! Only a higher-priority owner may preempt; a lower-priority owner can get
//! its bandwidth back from a higher-priority borrower by devolution alone.
//!
//! FRFS ignores classes for admission and treats the link as one pool.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    partition, BamModel, Bandwidth, Breakdown, ClassId, LinkId, LspRequest, RequestId, Share,
    ValidatedConfig,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BamError {
    #[error("class {class} is not configured on link {link}")]
    UnknownClass { link: LinkId, class: ClassId },
    #[error("request {0} has a zero bandwidth demand")]
    InvalidDemand(RequestId),
    #[error("request {request} is not active on link {link}")]
    UnknownRequest { link: LinkId, request: RequestId },
    #[error("request {request} is already active on link {link}")]
    DuplicateRequest { link: LinkId, request: RequestId },
    #[error("no borrowers occupy the constraint of class {class} on link {link}")]
    NothingToReclaim { link: LinkId, class: ClassId },
}

/// Why a request was refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockReason {
    /// Bandwidth the requesting class could reach under its model.
    pub available: Bandwidth,
    pub demand: Bandwidth,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdmitOutcome {
    Accepted(Breakdown),
    Blocked(BlockReason),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReclaimKind {
    /// The victim stays up; its share of the contested constraint moved to
    /// the listed breakdown (the victim's complete new breakdown on the link).
    Devolution { breakdown: Breakdown },
    /// The victim was torn down on this link and must be torn down end to end.
    Preemption,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReclaimEvent {
    pub kind: ReclaimKind,
    pub victim: RequestId,
    pub victim_class: ClassId,
    /// Bandwidth returned to the owner's constraint.
    pub freed: Bandwidth,
    /// Owner of the reclaimed constraint.
    pub reason_class: ClassId,
}

impl ReclaimEvent {
    pub fn is_preemption(&self) -> bool {
        matches!(self.kind, ReclaimKind::Preemption)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmitDecision {
    pub outcome: AdmitOutcome,
    pub side_effects: Vec<ReclaimEvent>,
}

impl AdmitDecision {
    pub fn is_accepted(&self) -> bool {
        matches!(self.outcome, AdmitOutcome::Accepted(_))
    }

    pub fn breakdown(&self) -> Option<&Breakdown> {
        match &self.outcome {
            AdmitOutcome::Accepted(b) => Some(b),
            AdmitOutcome::Blocked(_) => None,
        }
    }
}

/// Decomposition of a class's usage on a link.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassUsage {
    /// Class-k LSP bandwidth drawn from BC^k.
    pub own_use: Bandwidth,
    /// Other classes' LSP bandwidth drawn from BC^k.
    pub lent: Bandwidth,
    /// Class-k LSP bandwidth drawn from other constraints.
    pub borrowed: Bandwidth,
}

/// One active LSP on a link.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub class: ClassId,
    pub demand: Bandwidth,
    /// Admission order on this link; larger is more recent.
    pub seq: u64,
    pub parts: Breakdown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ClassLedger {
    id: ClassId,
    priority: u32,
    bc: Bandwidth,
    public: Bandwidth,
    /// Everything drawn from this class's constraint, by anyone.
    drawn: Bandwidth,
    /// Portion of `drawn` held by other classes.
    lent: Bandwidth,
    /// This class's LSP bandwidth drawn from other constraints.
    borrowed: Bandwidth,
}

impl ClassLedger {
    fn own_free(&self) -> Bandwidth {
        self.bc.saturating_sub(self.drawn)
    }

    fn public_free(&self) -> Bandwidth {
        self.public.saturating_sub(self.lent).min(self.own_free())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("link {link}: {detail}")]
pub struct InvariantViolation {
    pub link: LinkId,
    pub detail: String,
}

/// Allocation ledger and admission state machine for one link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkState {
    link: LinkId,
    model: BamModel,
    capacity: Bandwidth,
    classes: Vec<ClassLedger>,
    /// Per class index: donor indices in scan order (lowest priority first,
    /// restricted by the model's sharing direction).
    donor_order: Vec<Vec<usize>>,
    allocations: BTreeMap<RequestId, Allocation>,
    used: Bandwidth,
    next_seq: u64,
}

/// Common interface over admission engines so checks can drive any of them.
pub trait AdmissionEngine: Clone {
    fn link(&self) -> LinkId;
    fn admit(&mut self, req: &LspRequest) -> Result<AdmitDecision, BamError>;
    fn release(&mut self, request: RequestId) -> Result<Breakdown, BamError>;
}

impl AdmissionEngine for LinkState {
    fn link(&self) -> LinkId {
        self.link
    }

    fn admit(&mut self, req: &LspRequest) -> Result<AdmitDecision, BamError> {
        LinkState::admit(self, req)
    }

    fn release(&mut self, request: RequestId) -> Result<Breakdown, BamError> {
        LinkState::release(self, request)
    }
}

impl LinkState {
    pub fn new(config: &ValidatedConfig) -> Self {
        let classes: Vec<ClassLedger> = config
            .classes()
            .iter()
            .map(|c| ClassLedger {
                id: c.class,
                priority: c.priority,
                bc: c.bc,
                public: partition(c).1,
                drawn: Bandwidth::ZERO,
                lent: Bandwidth::ZERO,
                borrowed: Bandwidth::ZERO,
            })
            .collect();
        let mut by_priority: Vec<usize> = (0..classes.len()).collect();
        by_priority.sort_by_key(|&i| classes[i].priority);
        let donor_order = classes
            .iter()
            .map(|k| {
                by_priority
                    .iter()
                    .copied()
                    .filter(|&z| config.model().may_borrow(k.priority, classes[z].priority))
                    .collect()
            })
            .collect();
        LinkState {
            link: config.link(),
            model: config.model(),
            capacity: config.capacity(),
            classes,
            donor_order,
            allocations: BTreeMap::new(),
            used: Bandwidth::ZERO,
            next_seq: 0,
        }
    }

    pub fn link(&self) -> LinkId {
        self.link
    }

    pub fn model(&self) -> BamModel {
        self.model
    }

    pub fn capacity(&self) -> Bandwidth {
        self.capacity
    }

    pub fn used(&self) -> Bandwidth {
        self.used
    }

    pub fn class_ids(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.classes.iter().map(|c| c.id)
    }

    pub fn allocations(&self) -> &BTreeMap<RequestId, Allocation> {
        &self.allocations
    }

    pub fn allocation(&self, request: RequestId) -> Option<&Allocation> {
        self.allocations.get(&request)
    }

    pub fn is_active(&self, request: RequestId) -> bool {
        self.allocations.contains_key(&request)
    }

    fn index(&self, class: ClassId) -> Result<usize, BamError> {
        self.classes
            .iter()
            .position(|c| c.id == class)
            .ok_or(BamError::UnknownClass {
                link: self.link,
                class,
            })
    }

    /// Bandwidth a class can take right now without reclaiming anything:
    /// its free constraint plus the free public bandwidth of every donor its
    /// model lets it borrow from. Under FRFS, the free link bandwidth.
    pub fn available(&self, class: ClassId) -> Result<Bandwidth, BamError> {
        let k = self.index(class)?;
        Ok(self.available_at(k))
    }

    fn available_at(&self, k: usize) -> Bandwidth {
        if self.model == BamModel::Frfs {
            return self.capacity - self.used;
        }
        self.classes[k].own_free()
            + self.donor_order[k]
                .iter()
                .map(|&z| self.classes[z].public_free())
                .sum()
    }

    /// Greedy draw plan: own constraint first, then donors in scan order,
    /// skipping `exclude`. Returns `None` if `demand` cannot be covered.
    fn plan(&self, k: usize, demand: Bandwidth, exclude: Option<usize>) -> Option<Breakdown> {
        let mut parts = Vec::new();
        let mut remaining = demand;
        let own = self.classes[k].own_free().min(remaining);
        if !own.is_zero() && exclude != Some(k) {
            parts.push(Share::new(self.classes[k].id, own));
            remaining -= own;
        }
        for &z in &self.donor_order[k] {
            if remaining.is_zero() {
                break;
            }
            if exclude == Some(z) {
                continue;
            }
            let take = self.classes[z].public_free().min(remaining);
            if !take.is_zero() {
                parts.push(Share::new(self.classes[z].id, take));
                remaining -= take;
            }
        }
        remaining.is_zero().then_some(parts)
    }

    /// Decides a request and applies the decision to the ledger.
    ///
    /// Admission never depends on the request or user identity, only on the
    /// ledger, the class and the demand.
    pub fn admit(&mut self, req: &LspRequest) -> Result<AdmitDecision, BamError> {
        let k = self.index(req.class)?;
        if req.demand.is_zero() {
            return Err(BamError::InvalidDemand(req.id));
        }
        if self.allocations.contains_key(&req.id) {
            return Err(BamError::DuplicateRequest {
                link: self.link,
                request: req.id,
            });
        }
        let demand = req.demand;

        let plan = match self.model {
            BamModel::Frfs => {
                (self.used + demand <= self.capacity).then(|| vec![Share::new(req.class, demand)])
            }
            BamModel::Mam => (self.classes[k].own_free() >= demand)
                .then(|| vec![Share::new(req.class, demand)]),
            BamModel::Rdm | BamModel::Atcs => self.plan(k, demand, None),
        };
        if let Some(parts) = plan {
            self.insert(req.id, req.class, demand, parts.clone());
            return Ok(AdmitDecision {
                outcome: AdmitOutcome::Accepted(parts),
                side_effects: Vec::new(),
            });
        }

        // Reclaim only when it lets the request in. Take back as little as
        // possible and re-plan; if devolved borrowers used up the public
        // bandwidth the plan counted on, retry reclaiming enough for the
        // request to fit in its own constraint.
        let owner = &self.classes[k];
        let available = self.available_at(k);
        let blocked = AdmitDecision {
            outcome: AdmitOutcome::Blocked(BlockReason { available, demand }),
            side_effects: Vec::new(),
        };
        if !matches!(self.model, BamModel::Rdm | BamModel::Atcs)
            || owner.lent.is_zero()
            || available + owner.lent < demand
        {
            return Ok(blocked);
        }
        let minimal = demand - available;
        let full = demand.saturating_sub(owner.own_free());
        let mut attempts = vec![minimal];
        if full > minimal {
            attempts.push(full);
        }
        for needed in attempts {
            let mut trial = self.clone();
            let events = trial.reclaim(req.class, needed)?;
            if let Some(parts) = trial.plan(k, demand, None) {
                *self = trial;
                self.insert(req.id, req.class, demand, parts.clone());
                return Ok(AdmitDecision {
                    outcome: AdmitOutcome::Accepted(parts),
                    side_effects: events,
                });
            }
        }
        Ok(blocked)
    }

    fn insert(&mut self, id: RequestId, class: ClassId, demand: Bandwidth, parts: Breakdown) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.charge(class, &parts);
        self.allocations.insert(
            id,
            Allocation {
                class,
                demand,
                seq,
                parts,
            },
        );
    }

    fn charge(&mut self, class: ClassId, parts: &[Share]) {
        let owner = self.classes.iter().position(|c| c.id == class).unwrap();
        for share in parts {
            let z = self.classes.iter().position(|c| c.id == share.donor).unwrap();
            self.classes[z].drawn += share.amount;
            if z != owner {
                self.classes[z].lent += share.amount;
                self.classes[owner].borrowed += share.amount;
            }
            self.used += share.amount;
        }
    }

    fn refund(&mut self, class: ClassId, parts: &[Share]) {
        let owner = self.classes.iter().position(|c| c.id == class).unwrap();
        for share in parts {
            let z = self.classes.iter().position(|c| c.id == share.donor).unwrap();
            self.classes[z].drawn -= share.amount;
            if z != owner {
                self.classes[z].lent -= share.amount;
                self.classes[owner].borrowed -= share.amount;
            }
            self.used -= share.amount;
        }
    }

    /// Returns every donor-tagged amount of an LSP to its donor.
    pub fn release(&mut self, request: RequestId) -> Result<Breakdown, BamError> {
        let alloc = self
            .allocations
            .remove(&request)
            .ok_or(BamError::UnknownRequest {
                link: self.link,
                request,
            })?;
        self.refund(alloc.class, &alloc.parts);
        Ok(alloc.parts)
    }

    /// Frees at least `needed` of `owner`'s constraint from borrowers, or as
    /// much as they can give back.
    ///
    /// Victims form a minimal-count set, chosen lowest-priority borrower
    /// class first and most recently admitted first. Each victim is devolved
    /// if its contested share fits elsewhere under its own model rules
    /// (never back into `owner`'s constraint); otherwise it is preempted on
    /// this link and the caller must tear it down end to end. Borrowers of
    /// higher priority than `owner` may only be devolved: if one cannot be,
    /// it keeps its share and the selection is redone without it.
    pub fn reclaim(
        &mut self,
        owner: ClassId,
        needed: Bandwidth,
    ) -> Result<Vec<ReclaimEvent>, BamError> {
        let k = self.index(owner)?;
        let mut candidates: Vec<Candidate> = self
            .allocations
            .iter()
            .filter(|(_, a)| a.class != owner)
            .filter_map(|(&id, a)| {
                let amount: Bandwidth = a
                    .parts
                    .iter()
                    .filter(|s| s.donor == owner)
                    .map(|s| s.amount)
                    .sum();
                (!amount.is_zero()).then(|| Candidate {
                    request: id,
                    priority: self.classes[self.index(a.class).unwrap()].priority,
                    seq: a.seq,
                    amount,
                })
            })
            .collect();
        if candidates.is_empty() {
            return Err(BamError::NothingToReclaim {
                link: self.link,
                class: owner,
            });
        }
        candidates.sort_by(victim_order);
        loop {
            let mut trial = self.clone();
            match trial.reclaim_from(k, &candidates, needed) {
                Ok(events) => {
                    *self = trial;
                    return Ok(events);
                }
                Err(stuck) => candidates.retain(|c| c.request != stuck),
            }
        }
    }

    /// Applies one victim selection. Fails with the first protected victim
    /// that could not be devolved.
    fn reclaim_from(
        &mut self,
        k: usize,
        candidates: &[Candidate],
        needed: Bandwidth,
    ) -> Result<Vec<ReclaimEvent>, RequestId> {
        let owner = self.classes[k].id;
        let owner_priority = self.classes[k].priority;
        let chosen = select_victims(candidates, needed);
        let mut events = Vec::with_capacity(chosen.len());
        for idx in chosen {
            let victim = candidates[idx].request;
            let alloc = self.allocations[&victim].clone();
            let v = self.classes.iter().position(|c| c.id == alloc.class).unwrap();
            let contested = candidates[idx].amount;
            let kept: Breakdown = alloc
                .parts
                .iter()
                .copied()
                .filter(|s| s.donor != owner)
                .collect();

            // Take the contested share out, then look for a new home.
            self.refund(alloc.class, &[Share::new(owner, contested)]);
            match self.plan(v, contested, Some(k)) {
                Some(extra) => {
                    let mut parts = kept;
                    for s in &extra {
                        match parts.iter_mut().find(|p| p.donor == s.donor) {
                            Some(p) => p.amount += s.amount,
                            None => parts.push(*s),
                        }
                    }
                    self.charge(alloc.class, &extra);
                    self.allocations.get_mut(&victim).unwrap().parts = parts.clone();
                    events.push(ReclaimEvent {
                        kind: ReclaimKind::Devolution { breakdown: parts },
                        victim,
                        victim_class: alloc.class,
                        freed: contested,
                        reason_class: owner,
                    });
                }
                None if self.classes[v].priority > owner_priority => return Err(victim),
                None => {
                    self.refund(alloc.class, &kept);
                    self.allocations.remove(&victim);
                    events.push(ReclaimEvent {
                        kind: ReclaimKind::Preemption,
                        victim,
                        victim_class: alloc.class,
                        freed: contested,
                        reason_class: owner,
                    });
                }
            }
        }
        Ok(events)
    }

    /// `(own_use, lent, borrowed)` decomposition for a class.
    pub fn used_bandwidth(&self, class: ClassId) -> Result<ClassUsage, BamError> {
        let c = &self.classes[self.index(class)?];
        Ok(ClassUsage {
            own_use: c.drawn - c.lent,
            lent: c.lent,
            borrowed: c.borrowed,
        })
    }

    /// Total bandwidth drawn from a class's constraint.
    pub fn drawn_from(&self, class: ClassId) -> Result<Bandwidth, BamError> {
        Ok(self.classes[self.index(class)?].drawn)
    }

    /// Verifies conservation, per-donor and sharing-limit bounds, model
    /// direction rules and that counters match a rebuild from allocations.
    pub fn audit(&self) -> Result<(), InvariantViolation> {
        let fail = |detail: String| {
            Err(InvariantViolation {
                link: self.link,
                detail,
            })
        };
        let n = self.classes.len();
        let mut drawn = vec![Bandwidth::ZERO; n];
        let mut lent = vec![Bandwidth::ZERO; n];
        let mut borrowed = vec![Bandwidth::ZERO; n];
        let mut total = Bandwidth::ZERO;
        for (id, a) in &self.allocations {
            let Some(owner) = self.classes.iter().position(|c| c.id == a.class) else {
                return fail(format!("request {id} has unknown class {}", a.class));
            };
            let sum: Bandwidth = a.parts.iter().map(|s| s.amount).sum();
            if sum != a.demand {
                return fail(format!("request {id} breakdown sums to {sum}, demand {}", a.demand));
            }
            for s in &a.parts {
                if s.amount.is_zero() {
                    return fail(format!("request {id} has an empty share"));
                }
                let Some(z) = self.classes.iter().position(|c| c.id == s.donor) else {
                    return fail(format!("request {id} draws on unknown class {}", s.donor));
                };
                if z != owner {
                    if !self
                        .model
                        .may_borrow(self.classes[owner].priority, self.classes[z].priority)
                    {
                        return fail(format!(
                            "request {id} ({}) borrows from {} against {} rules",
                            a.class, s.donor, self.model
                        ));
                    }
                    lent[z] += s.amount;
                    borrowed[owner] += s.amount;
                }
                drawn[z] += s.amount;
                total += s.amount;
            }
        }
        if total != self.used {
            return fail(format!("used counter {} != rebuilt {total}", self.used));
        }
        if total > self.capacity {
            return fail(format!("usage {total} exceeds capacity {}", self.capacity));
        }
        for (i, c) in self.classes.iter().enumerate() {
            if c.drawn != drawn[i] || c.lent != lent[i] || c.borrowed != borrowed[i] {
                return fail(format!("counters of {} drifted from allocations", c.id));
            }
            if self.model == BamModel::Frfs {
                continue;
            }
            if c.drawn > c.bc {
                return fail(format!("{} constraint over-drawn: {} > {}", c.id, c.drawn, c.bc));
            }
            if c.lent > c.public {
                return fail(format!("{} lent {} beyond public {}", c.id, c.lent, c.public));
            }
        }
        Ok(())
    }
}

impl fmt::Display for LinkState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}] {}/{}", self.link, self.model, self.used, self.capacity)?;
        for c in &self.classes {
            write!(f, " {}:{}(lent {})", c.id, c.drawn, c.lent)?;
        }
        Ok(())
    }
}

/// A borrower LSP occupying the contested constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub request: RequestId,
    /// Priority of the borrower's class.
    pub priority: u32,
    pub seq: u64,
    /// Its share of the contested constraint.
    pub amount: Bandwidth,
}

/// Lowest priority first, then most recently admitted first.
pub fn victim_order(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    a.priority.cmp(&b.priority).then(b.seq.cmp(&a.seq))
}

/// Picks victims from `candidates` (already in [`victim_order`]) freeing at
/// least `needed`.
///
/// The result has minimal cardinality; among minimal sets it is the
/// lexicographically first in candidate order. If the candidates together
/// hold less than `needed`, all of them are returned.
pub fn select_victims(candidates: &[Candidate], needed: Bandwidth) -> Vec<usize> {
    let total: Bandwidth = candidates.iter().map(|c| c.amount).sum();
    if total < needed {
        return (0..candidates.len()).collect();
    }
    let mut sizes: Vec<Bandwidth> = candidates.iter().map(|c| c.amount).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let mut count = 0;
    let mut acc = Bandwidth::ZERO;
    while acc < needed {
        acc += sizes[count];
        count += 1;
    }

    // Largest `r` amounts strictly after position `from`.
    let best_tail = |from: usize, r: usize| -> Bandwidth {
        let mut tail: Vec<Bandwidth> = candidates[from + 1..].iter().map(|c| c.amount).collect();
        tail.sort_unstable_by(|a, b| b.cmp(a));
        tail.iter().take(r).sum()
    };

    let mut chosen = Vec::with_capacity(count);
    let mut sum = Bandwidth::ZERO;
    let mut start = 0;
    for slot in 0..count {
        let rest = count - slot - 1;
        let pick = (start..candidates.len())
            .find(|&i| {
                candidates.len() - i > rest
                    && sum + candidates[i].amount + best_tail(i, rest) >= needed
            })
            .expect("a minimal-count cover exists");
        chosen.push(pick);
        sum += candidates[pick].amount;
        start = pick + 1;
    }
    chosen
}
