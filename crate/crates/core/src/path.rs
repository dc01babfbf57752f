//! End-to-end LSP admission over independently managed links.
//!
//! A path is admitted segment by segment in path order. If any link blocks,
//! the segments granted so far are released in reverse order and the LSP is
//! blocked once. Reclaim side effects already performed on earlier links
//! stay: a preemption is a teardown and cannot be undone.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bam::{
    AdmitOutcome, BamError, BlockReason, InvariantViolation, LinkState, ReclaimEvent,
};
use crate::model::{
    Bandwidth, Breakdown, ClassId, LinkId, LspAllocation, LspRequest, NetworkGraph, RequestId,
    Segment, SwitchId, ValidatedConfig,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("no path from switch {src} to switch {dst}")]
    NoPath {
        src: SwitchId,
        dst: SwitchId,
    },
    #[error("path {src}->{dst} uses link {link} which is not in the graph")]
    UnknownLink {
        src: SwitchId,
        dst: SwitchId,
        link: LinkId,
    },
    #[error("path {src}->{dst} does not concatenate at segment {index}")]
    Broken {
        src: SwitchId,
        dst: SwitchId,
        index: usize,
    },
    #[error("link {0} has no allocation model configured")]
    Unconfigured(LinkId),
    #[error("request {0} is not an active LSP")]
    UnknownRequest(RequestId),
    #[error(transparent)]
    Engine(#[from] BamError),
}

/// Static `(source, destination) -> segments` lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathTable {
    paths: BTreeMap<(SwitchId, SwitchId), Vec<Segment>>,
}

impl PathTable {
    /// Builds a table from explicit link sequences, checking that each path
    /// starts at its source, ends at its destination and concatenates.
    pub fn new(
        graph: &NetworkGraph,
        entries: impl IntoIterator<Item = (SwitchId, SwitchId, Vec<LinkId>)>,
    ) -> Result<Self, PathError> {
        let mut paths = BTreeMap::new();
        for (source, destination, links) in entries {
            if links.is_empty() {
                return Err(PathError::NoPath {
                    src: source,
                    dst: destination,
                });
            }
            let mut at = source;
            for (index, &link) in links.iter().enumerate() {
                if !graph.contains(link) {
                    return Err(PathError::UnknownLink {
                        src: source,
                        dst: destination,
                        link,
                    });
                }
                if link.from != at {
                    return Err(PathError::Broken {
                        src: source,
                        dst: destination,
                        index,
                    });
                }
                at = link.to;
            }
            if at != destination {
                return Err(PathError::Broken {
                    src: source,
                    dst: destination,
                    index: links.len(),
                });
            }
            paths.insert(
                (source, destination),
                links.into_iter().map(Segment::of).collect(),
            );
        }
        Ok(PathTable { paths })
    }

    /// Minimum-hop path for every reachable ordered pair, breadth first with
    /// neighbours visited in ascending switch order.
    pub fn shortest_hop(graph: &NetworkGraph) -> Self {
        let mut paths = BTreeMap::new();
        for &source in graph.switches() {
            let mut parent: BTreeMap<SwitchId, SwitchId> = BTreeMap::new();
            let mut queue = VecDeque::from([source]);
            parent.insert(source, source);
            while let Some(u) = queue.pop_front() {
                for v in graph.neighbours(u) {
                    if let std::collections::btree_map::Entry::Vacant(e) = parent.entry(v) {
                        e.insert(u);
                        queue.push_back(v);
                    }
                }
            }
            for &destination in graph.switches() {
                if destination == source || !parent.contains_key(&destination) {
                    continue;
                }
                let mut segments = Vec::new();
                let mut at = destination;
                while at != source {
                    let prev = parent[&at];
                    segments.push(Segment::of(LinkId::new(prev, at)));
                    at = prev;
                }
                segments.reverse();
                paths.insert((source, destination), segments);
            }
        }
        PathTable { paths }
    }

    pub fn get(&self, source: SwitchId, destination: SwitchId) -> Option<&[Segment]> {
        self.paths.get(&(source, destination)).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (SwitchId, SwitchId, &[Segment])> {
        self.paths
            .iter()
            .map(|(&(s, d), segs)| (s, d, segs.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// A reclaim performed on one link while admitting a path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkReclaim {
    pub link: LinkId,
    pub event: ReclaimEvent,
    /// For a preemption, every link of the victim's path (the victim is
    /// gone from all of them); empty for a devolution.
    pub torn_down: Vec<LinkId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathDecision {
    Accepted {
        allocation: LspAllocation,
        reclaims: Vec<LinkReclaim>,
    },
    Blocked {
        site: LinkId,
        reason: BlockReason,
        /// Irreversible side effects on links granted before the block.
        reclaims: Vec<LinkReclaim>,
    },
}

impl PathDecision {
    pub fn is_accepted(&self) -> bool {
        matches!(self, PathDecision::Accepted { .. })
    }

    pub fn reclaims(&self) -> &[LinkReclaim] {
        match self {
            PathDecision::Accepted { reclaims, .. } | PathDecision::Blocked { reclaims, .. } => {
                reclaims
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ActiveLsp {
    class: ClassId,
    demand: Bandwidth,
    segments: Vec<Segment>,
}

/// All link engines of a network plus the set of active LSPs.
#[derive(Debug, Clone)]
pub struct Network {
    links: BTreeMap<LinkId, LinkState>,
    paths: PathTable,
    active: BTreeMap<RequestId, ActiveLsp>,
}

impl Network {
    /// Every link used by a path must have a config.
    pub fn new(
        configs: impl IntoIterator<Item = ValidatedConfig>,
        paths: PathTable,
    ) -> Result<Self, PathError> {
        let links: BTreeMap<LinkId, LinkState> = configs
            .into_iter()
            .map(|c| (c.link(), LinkState::new(&c)))
            .collect();
        for (_, _, segments) in paths.iter() {
            if let Some(s) = segments.iter().find(|s| !links.contains_key(&s.link)) {
                return Err(PathError::Unconfigured(s.link));
            }
        }
        Ok(Network {
            links,
            paths,
            active: BTreeMap::new(),
        })
    }

    pub fn link(&self, id: LinkId) -> Option<&LinkState> {
        self.links.get(&id)
    }

    pub fn links(&self) -> impl Iterator<Item = &LinkState> {
        self.links.values()
    }

    pub fn paths(&self) -> &PathTable {
        &self.paths
    }

    pub fn is_active(&self, request: RequestId) -> bool {
        self.active.contains_key(&request)
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn active_ids(&self) -> impl Iterator<Item = RequestId> + '_ {
        self.active.keys().copied()
    }

    /// Current allocation of an active LSP, read back from its links.
    pub fn allocation(&self, request: RequestId) -> Option<LspAllocation> {
        let lsp = self.active.get(&request)?;
        let breakdowns = lsp
            .segments
            .iter()
            .map(|s| self.links[&s.link].allocation(request).map(|a| a.parts.clone()))
            .collect::<Option<Vec<_>>>()?;
        Some(LspAllocation {
            request,
            class: lsp.class,
            demand: lsp.demand,
            segments: lsp.segments.clone(),
            breakdowns,
        })
    }

    /// Admits an LSP on every segment of its path or on none.
    pub fn admit_path(&mut self, req: &LspRequest) -> Result<PathDecision, PathError> {
        let segments = self
            .paths
            .get(req.source, req.destination)
            .ok_or(PathError::NoPath {
                src: req.source,
                dst: req.destination,
            })?
            .to_vec();
        if req.demand.is_zero() {
            return Err(BamError::InvalidDemand(req.id).into());
        }
        for s in &segments {
            let link = &self.links[&s.link];
            if !link.class_ids().any(|c| c == req.class) {
                return Err(BamError::UnknownClass {
                    link: s.link,
                    class: req.class,
                }
                .into());
            }
            if link.is_active(req.id) || self.active.contains_key(&req.id) {
                return Err(BamError::DuplicateRequest {
                    link: s.link,
                    request: req.id,
                }
                .into());
            }
        }

        let mut granted: Vec<(LinkId, Breakdown)> = Vec::with_capacity(segments.len());
        let mut reclaims = Vec::new();
        for s in &segments {
            let decision = self
                .links
                .get_mut(&s.link)
                .expect("checked above")
                .admit(req)?;
            for event in decision.side_effects {
                let torn_down = if event.is_preemption() {
                    self.tear_down_victim(event.victim, s.link)
                } else {
                    Vec::new()
                };
                reclaims.push(LinkReclaim {
                    link: s.link,
                    event,
                    torn_down,
                });
            }
            match decision.outcome {
                AdmitOutcome::Accepted(parts) => granted.push((s.link, parts)),
                AdmitOutcome::Blocked(reason) => {
                    for (link, _) in granted.iter().rev() {
                        self.links
                            .get_mut(link)
                            .unwrap()
                            .release(req.id)
                            .expect("granted segment is active");
                    }
                    return Ok(PathDecision::Blocked {
                        site: s.link,
                        reason,
                        reclaims,
                    });
                }
            }
        }

        self.active.insert(
            req.id,
            ActiveLsp {
                class: req.class,
                demand: req.demand,
                segments: segments.clone(),
            },
        );
        Ok(PathDecision::Accepted {
            allocation: LspAllocation {
                request: req.id,
                class: req.class,
                demand: req.demand,
                segments,
                breakdowns: granted.into_iter().map(|(_, b)| b).collect(),
            },
            reclaims,
        })
    }

    /// Removes a preempted victim from every other link of its path.
    fn tear_down_victim(&mut self, victim: RequestId, at: LinkId) -> Vec<LinkId> {
        let Some(lsp) = self.active.remove(&victim) else {
            return vec![at];
        };
        for s in &lsp.segments {
            if s.link != at {
                self.links
                    .get_mut(&s.link)
                    .unwrap()
                    .release(victim)
                    .expect("active LSP is held on all its links");
            }
        }
        lsp.segments.iter().map(|s| s.link).collect()
    }

    /// Releases an LSP on every segment (lifetime expiry or external teardown).
    pub fn teardown_path(
        &mut self,
        request: RequestId,
    ) -> Result<Vec<(LinkId, Breakdown)>, PathError> {
        let lsp = self
            .active
            .remove(&request)
            .ok_or(PathError::UnknownRequest(request))?;
        lsp.segments
            .iter()
            .map(|s| {
                let parts = self.links.get_mut(&s.link).unwrap().release(request)?;
                Ok((s.link, parts))
            })
            .collect()
    }

    /// Link invariants plus path atomicity: an LSP is held on all of its
    /// links or none, and links hold nothing that is not an active LSP.
    pub fn audit(&self) -> Result<(), InvariantViolation> {
        for link in self.links.values() {
            link.audit()?;
        }
        for (&id, lsp) in &self.active {
            for s in &lsp.segments {
                match self.links[&s.link].allocation(id) {
                    Some(a) if a.class == lsp.class && a.demand == lsp.demand => {}
                    _ => {
                        return Err(InvariantViolation {
                            link: s.link,
                            detail: format!("active LSP {id} missing from its path"),
                        })
                    }
                }
            }
        }
        for link in self.links.values() {
            for &id in link.allocations().keys() {
                let on_path = self
                    .active
                    .get(&id)
                    .is_some_and(|lsp| lsp.segments.iter().any(|s| s.link == link.link()));
                if !on_path {
                    return Err(InvariantViolation {
                        link: link.link(),
                        detail: format!("orphan allocation for request {id}"),
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        validate_link_config, BamModel, LinkBamConfig, Share, TrafficClassConfig,
    };

    fn mbps(v: u64) -> Bandwidth {
        Bandwidth::from_mbps(v)
    }

    /// Line 0-1-2-3 with 30 Mbps links, two classes of BC 15.
    fn line(model: BamModel) -> Network {
        let graph =
            NetworkGraph::bidirectional(0..4, (0..3).map(|i| (i, i + 1, mbps(30)))).unwrap();
        let configs = graph.links().map(|(id, lb)| {
            let cfg = LinkBamConfig {
                link: id,
                model,
                classes: vec![
                    TrafficClassConfig::new(0, 0, mbps(15), 1.0),
                    TrafficClassConfig::new(1, 1, mbps(15), 1.0),
                ],
            };
            validate_link_config(&cfg, lb).unwrap()
        });
        Network::new(configs.collect::<Vec<_>>(), PathTable::shortest_hop(&graph)).unwrap()
    }

    fn req(id: u64, class: u32, bw: u64, src: u32, dst: u32) -> LspRequest {
        LspRequest {
            id,
            user: id,
            class: ClassId(class),
            demand: mbps(bw),
            source: src,
            destination: dst,
            arrival_ms: 0,
            holding_ms: 1,
        }
    }

    #[test]
    fn shortest_hop_paths_concatenate() {
        let net = line(BamModel::Atcs);
        let p = net.paths().get(0, 3).unwrap();
        assert_eq!(p.len(), 3);
        assert!(p.windows(2).all(|w| w[0].to == w[1].from));
        assert_eq!(net.paths().len(), 12);
    }

    #[test]
    fn explicit_table_validation() {
        let g = NetworkGraph::bidirectional(0..3, [(0, 1, mbps(1)), (1, 2, mbps(1))]).unwrap();
        assert!(PathTable::new(&g, [(0, 2, vec![LinkId::new(0, 1), LinkId::new(1, 2)])]).is_ok());
        assert!(matches!(
            PathTable::new(&g, [(0, 2, vec![LinkId::new(1, 2)])]),
            Err(PathError::Broken { .. })
        ));
        assert!(matches!(
            PathTable::new(&g, [(0, 2, vec![LinkId::new(0, 2)])]),
            Err(PathError::UnknownLink { .. })
        ));
    }

    #[test]
    fn single_segment_matches_bare_admit() {
        let mut net = line(BamModel::Atcs);
        let mut bare = net.link(LinkId::new(0, 1)).unwrap().clone();
        for i in 0..40 {
            let r = req(i, (i % 2) as u32, 1 + i % 3, 0, 1);
            let a = net.admit_path(&r).unwrap();
            let b = bare.admit(&r).unwrap();
            assert_eq!(a.is_accepted(), b.is_accepted());
            if let PathDecision::Accepted { allocation, .. } = a {
                assert_eq!(Some(&allocation.breakdowns[0]), b.breakdown());
            }
        }
        assert_eq!(net.link(LinkId::new(0, 1)).unwrap(), &bare);
    }

    #[test]
    fn blocked_segment_rolls_back() {
        let mut net = line(BamModel::Mam);
        // Fill class 0 on the middle link 1>2.
        net.admit_path(&req(1, 0, 15, 1, 2)).unwrap();
        let before: Vec<LinkState> = net.links().cloned().collect();
        let d = net.admit_path(&req(2, 0, 5, 0, 3)).unwrap();
        match d {
            PathDecision::Blocked { site, .. } => assert_eq!(site, LinkId::new(1, 2)),
            other => panic!("expected block, got {other:?}"),
        }
        let after: Vec<LinkState> = net.links().cloned().collect();
        // Ledgers identical; only admission counters may have moved.
        for (a, b) in before.iter().zip(&after) {
            assert_eq!(a.allocations(), b.allocations());
            assert_eq!(a.used(), b.used());
        }
        net.audit().unwrap();
    }

    #[test]
    fn segments_choose_donors_independently() {
        let mut net = line(BamModel::Atcs);
        // Class 1 saturates its BC on 0>1 only.
        net.admit_path(&req(1, 1, 15, 0, 1)).unwrap();
        let d = net.admit_path(&req(2, 1, 5, 0, 2)).unwrap();
        let PathDecision::Accepted { allocation, .. } = d else {
            panic!("expected accept")
        };
        assert_eq!(allocation.breakdowns[0], vec![Share::new(ClassId(0), mbps(5))]);
        assert_eq!(allocation.breakdowns[1], vec![Share::new(ClassId(1), mbps(5))]);
        assert!(allocation.is_well_formed());
        assert_eq!(net.allocation(2), Some(allocation));
    }

    #[test]
    fn preemption_on_single_link() {
        let mut net = line(BamModel::Atcs);
        net.admit_path(&req(1, 0, 15, 1, 2)).unwrap();
        // Borrows all of class 1's constraint on 1>2.
        net.admit_path(&req(2, 0, 15, 1, 2)).unwrap();
        let d = net.admit_path(&req(3, 1, 15, 1, 2)).unwrap();
        let PathDecision::Accepted { reclaims, .. } = d else {
            panic!("expected accept")
        };
        assert_eq!(reclaims.len(), 1);
        assert!(reclaims[0].event.is_preemption());
        assert_eq!(reclaims[0].event.victim, 2);
        assert_eq!(reclaims[0].torn_down, vec![LinkId::new(1, 2)]);
        net.audit().unwrap();
    }

    #[test]
    fn preemption_tears_down_end_to_end() {
        let mut net = line(BamModel::Atcs);
        net.admit_path(&req(10, 0, 15, 0, 3)).unwrap();
        // Borrows class 1's constraint on all three links.
        net.admit_path(&req(11, 0, 15, 0, 3)).unwrap();
        let d = net.admit_path(&req(14, 1, 10, 2, 3)).unwrap();
        assert!(d.is_accepted());
        let r = &d.reclaims()[0];
        assert!(r.event.is_preemption());
        assert_eq!(r.event.victim, 11);
        assert_eq!(r.torn_down.len(), 3);
        assert!(!net.is_active(11));
        for link in &r.torn_down {
            assert!(!net.link(*link).unwrap().is_active(11));
        }
        assert_eq!(net.link(LinkId::new(0, 1)).unwrap().used(), mbps(15));
        net.audit().unwrap();
    }

    #[test]
    fn teardown_paths() {
        let mut net = line(BamModel::Atcs);
        let pristine: Vec<Bandwidth> = net.links().map(|l| l.used()).collect();
        net.admit_path(&req(1, 0, 10, 0, 3)).unwrap();
        let freed = net.teardown_path(1).unwrap();
        assert_eq!(freed.len(), 3);
        assert_eq!(net.links().map(|l| l.used()).collect::<Vec<_>>(), pristine);
        assert_eq!(net.teardown_path(1), Err(PathError::UnknownRequest(1)));
    }

    #[test]
    fn errors() {
        let mut net = line(BamModel::Atcs);
        assert!(matches!(
            net.admit_path(&req(1, 0, 10, 0, 0)),
            Err(PathError::NoPath { .. })
        ));
        assert!(matches!(
            net.admit_path(&req(1, 5, 10, 0, 1)),
            Err(PathError::Engine(BamError::UnknownClass { .. }))
        ));
        net.admit_path(&req(1, 0, 10, 0, 1)).unwrap();
        assert!(matches!(
            net.admit_path(&req(1, 0, 10, 0, 1)),
            Err(PathError::Engine(BamError::DuplicateRequest { .. }))
        ));
    }
}
