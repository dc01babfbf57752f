//! Domain types shared by every layer: bandwidth units, the switch graph,
//! per-link traffic-class configuration and LSP requests/allocations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bandwidth in integral kilobits per second.
///
/// Every ledger in the crate counts in kbps so that partition sums and
/// conservation checks are exact.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Bandwidth(u64);

impl Bandwidth {
    pub const ZERO: Bandwidth = Bandwidth(0);

    pub const fn from_kbps(kbps: u64) -> Self {
        Bandwidth(kbps)
    }

    pub const fn from_mbps(mbps: u64) -> Self {
        Bandwidth(mbps * 1000)
    }

    /// Converts a fractional Mbps value, rounding to the nearest kbps.
    /// Negative and non-finite inputs map to zero.
    pub fn from_mbps_f64(mbps: f64) -> Self {
        if mbps.is_finite() && mbps > 0.0 {
            Bandwidth((mbps * 1000.0).round() as u64)
        } else {
            Bandwidth(0)
        }
    }

    pub const fn kbps(self) -> u64 {
        self.0
    }

    pub fn mbps(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub const fn saturating_sub(self, rhs: Bandwidth) -> Bandwidth {
        Bandwidth(self.0.saturating_sub(rhs.0))
    }

    pub fn checked_sub(self, rhs: Bandwidth) -> Option<Bandwidth> {
        self.0.checked_sub(rhs.0).map(Bandwidth)
    }

    pub fn min(self, rhs: Bandwidth) -> Bandwidth {
        Bandwidth(self.0.min(rhs.0))
    }
}

impl Add for Bandwidth {
    type Output = Bandwidth;
    fn add(self, rhs: Bandwidth) -> Bandwidth {
        Bandwidth(self.0 + rhs.0)
    }
}

impl AddAssign for Bandwidth {
    fn add_assign(&mut self, rhs: Bandwidth) {
        self.0 += rhs.0;
    }
}

impl Sub for Bandwidth {
    type Output = Bandwidth;
    fn sub(self, rhs: Bandwidth) -> Bandwidth {
        Bandwidth(self.0 - rhs.0)
    }
}

impl SubAssign for Bandwidth {
    fn sub_assign(&mut self, rhs: Bandwidth) {
        self.0 -= rhs.0;
    }
}

impl Sum for Bandwidth {
    fn sum<I: Iterator<Item = Bandwidth>>(iter: I) -> Bandwidth {
        Bandwidth(iter.map(|b| b.0).sum())
    }
}

impl<'a> Sum<&'a Bandwidth> for Bandwidth {
    fn sum<I: Iterator<Item = &'a Bandwidth>>(iter: I) -> Bandwidth {
        iter.copied().sum()
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(1000) {
            write!(f, "{} Mbps", self.0 / 1000)
        } else {
            write!(f, "{:.3} Mbps", self.mbps())
        }
    }
}

pub type SwitchId = u32;
pub type RequestId = u64;
pub type UserId = u64;

/// Traffic class identifier (`TC0`, `TC1`, ...).
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct ClassId(pub u32);

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TC{}", self.0)
    }
}

impl std::str::FromStr for ClassId {
    type Err = String;

    /// Accepts `TC3` as well as a bare `3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.trim().strip_prefix("TC").unwrap_or(s.trim());
        digits
            .parse()
            .map(ClassId)
            .map_err(|_| format!("`{s}` is not a traffic class"))
    }
}

/// Directed link `from -> to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId {
    pub from: SwitchId,
    pub to: SwitchId,
}

impl LinkId {
    pub const fn new(from: SwitchId, to: SwitchId) -> Self {
        LinkId { from, to }
    }

    pub const fn reversed(self) -> Self {
        LinkId {
            from: self.to,
            to: self.from,
        }
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}>{}", self.from, self.to)
    }
}

impl std::str::FromStr for LinkId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once('>')
            .ok_or_else(|| format!("link `{s}` is not of the form `from>to`"))?;
        let from = a.trim().parse().map_err(|_| format!("bad switch id in `{s}`"))?;
        let to = b.trim().parse().map_err(|_| format!("bad switch id in `{s}`"))?;
        Ok(LinkId { from, to })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("link {link}: bandwidth constraints sum to {total}, exceeding link bandwidth {capacity}")]
    OverCommitted {
        link: LinkId,
        total: Bandwidth,
        capacity: Bandwidth,
    },
    #[error("link {link}: priority {priority} is assigned to more than one class")]
    DuplicatePriority { link: LinkId, priority: u32 },
    #[error("link {link}: class {class} has sharing limit {value}, expected a fraction in [0, 1]")]
    BadSharingLimit {
        link: LinkId,
        class: ClassId,
        value: f64,
    },
    #[error("link {link}: class {class} is listed twice")]
    DuplicateClass { link: LinkId, class: ClassId },
    #[error("link {link}: no traffic classes configured")]
    NoClasses { link: LinkId },
    #[error("link {0} has zero bandwidth")]
    ZeroCapacity(LinkId),
    #[error("link {0} connects a switch to itself")]
    SelfLoop(LinkId),
    #[error("link {0} references an unknown switch")]
    UnknownSwitch(LinkId),
    #[error("link {0} is declared twice")]
    DuplicateLink(LinkId),
}

/// Network switch graph with per-link total bandwidth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkGraph {
    switches: Vec<SwitchId>,
    links: BTreeMap<LinkId, Bandwidth>,
}

impl NetworkGraph {
    /// Builds a graph from directed links. Self loops, unknown endpoints,
    /// duplicates and zero-capacity links are rejected.
    pub fn new(
        switches: impl IntoIterator<Item = SwitchId>,
        links: impl IntoIterator<Item = (LinkId, Bandwidth)>,
    ) -> Result<Self, ConfigError> {
        let switches: BTreeSet<SwitchId> = switches.into_iter().collect();
        let mut map = BTreeMap::new();
        for (id, capacity) in links {
            if id.from == id.to {
                return Err(ConfigError::SelfLoop(id));
            }
            if !switches.contains(&id.from) || !switches.contains(&id.to) {
                return Err(ConfigError::UnknownSwitch(id));
            }
            if capacity.is_zero() {
                return Err(ConfigError::ZeroCapacity(id));
            }
            if map.insert(id, capacity).is_some() {
                return Err(ConfigError::DuplicateLink(id));
            }
        }
        Ok(NetworkGraph {
            switches: switches.into_iter().collect(),
            links: map,
        })
    }

    /// Adds both directions of every undirected edge with the same capacity.
    pub fn bidirectional(
        switches: impl IntoIterator<Item = SwitchId>,
        edges: impl IntoIterator<Item = (SwitchId, SwitchId, Bandwidth)>,
    ) -> Result<Self, ConfigError> {
        let links: Vec<_> = edges
            .into_iter()
            .flat_map(|(a, b, bw)| [(LinkId::new(a, b), bw), (LinkId::new(b, a), bw)])
            .collect();
        Self::new(switches, links)
    }

    pub fn switches(&self) -> &[SwitchId] {
        &self.switches
    }

    pub fn links(&self) -> impl Iterator<Item = (LinkId, Bandwidth)> + '_ {
        self.links.iter().map(|(&id, &bw)| (id, bw))
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn capacity(&self, link: LinkId) -> Option<Bandwidth> {
        self.links.get(&link).copied()
    }

    pub fn contains(&self, link: LinkId) -> bool {
        self.links.contains_key(&link)
    }

    /// Connectivity matrix `c[i][j]`, indexed by position in [`Self::switches`].
    pub fn connectivity(&self) -> Vec<Vec<u8>> {
        let index: BTreeMap<SwitchId, usize> = self
            .switches
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, i))
            .collect();
        let n = self.switches.len();
        let mut matrix = vec![vec![0u8; n]; n];
        for id in self.links.keys() {
            matrix[index[&id.from]][index[&id.to]] = 1;
        }
        matrix
    }

    pub fn neighbours(&self, switch: SwitchId) -> impl Iterator<Item = SwitchId> + '_ {
        self.links
            .range(LinkId::new(switch, 0)..=LinkId::new(switch, SwitchId::MAX))
            .map(|(id, _)| id.to)
    }
}

/// Bandwidth allocation model run by a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BamModel {
    /// Maximum Allocation Model: classes never share.
    Mam,
    /// Russian Dolls Model: lower priority classes borrow from higher ones.
    Rdm,
    /// AllocTC-Sharing: any class borrows public bandwidth of any other.
    Atcs,
    /// First-requested first-served: one classless pool.
    Frfs,
}

impl BamModel {
    pub const ALL: [BamModel; 4] = [BamModel::Mam, BamModel::Rdm, BamModel::Atcs, BamModel::Frfs];

    pub fn name(self) -> &'static str {
        match self {
            BamModel::Mam => "mam",
            BamModel::Rdm => "rdm",
            BamModel::Atcs => "atcs",
            BamModel::Frfs => "frfs",
        }
    }

    /// Whether `borrower` may draw on the public partition of `donor` under
    /// this model. Priorities compare with larger = more important.
    pub fn may_borrow(self, borrower_priority: u32, donor_priority: u32) -> bool {
        match self {
            BamModel::Mam | BamModel::Frfs => false,
            BamModel::Rdm => donor_priority > borrower_priority,
            BamModel::Atcs => donor_priority != borrower_priority,
        }
    }
}

impl fmt::Display for BamModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BamModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mam" => Ok(BamModel::Mam),
            "rdm" => Ok(BamModel::Rdm),
            "atcs" | "alloctc-sharing" => Ok(BamModel::Atcs),
            "frfs" => Ok(BamModel::Frfs),
            other => Err(format!("unknown model `{other}` (expected mam, rdm, atcs or frfs)")),
        }
    }
}

/// Configuration of one traffic class on one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficClassConfig {
    pub class: ClassId,
    /// Larger value means higher priority; must be distinct per link.
    pub priority: u32,
    /// Bandwidth constraint.
    pub bc: Bandwidth,
    /// Fraction of `bc` other classes may borrow.
    pub sharing_limit: f64,
}

impl TrafficClassConfig {
    pub fn new(class: u32, priority: u32, bc: Bandwidth, sharing_limit: f64) -> Self {
        TrafficClassConfig {
            class: ClassId(class),
            priority,
            bc,
            sharing_limit,
        }
    }
}

/// Splits a class's bandwidth constraint into `(private, public)`.
///
/// The public share is rounded to the nearest kbps and the private share is
/// the exact remainder, so the two always add back to `bc`.
pub fn partition(config: &TrafficClassConfig) -> (Bandwidth, Bandwidth) {
    let s = config.sharing_limit.clamp(0.0, 1.0);
    let public = Bandwidth::from_kbps((config.bc.kbps() as f64 * s).round() as u64).min(config.bc);
    (config.bc - public, public)
}

/// Per-link allocation model and class table.
///
/// Under FRFS the class table only labels requests (and sizes the virtual
/// bins used when reporting per-class utilization); admission sees a single
/// pool equal to the link bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBamConfig {
    pub link: LinkId,
    pub model: BamModel,
    pub classes: Vec<TrafficClassConfig>,
}

/// A [`LinkBamConfig`] that passed [`validate_link_config`] against its link
/// bandwidth. Classes are stored sorted by class id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidatedConfig {
    link: LinkId,
    model: BamModel,
    capacity: Bandwidth,
    classes: Vec<TrafficClassConfig>,
}

impl ValidatedConfig {
    pub fn link(&self) -> LinkId {
        self.link
    }

    pub fn model(&self) -> BamModel {
        self.model
    }

    pub fn capacity(&self) -> Bandwidth {
        self.capacity
    }

    pub fn classes(&self) -> &[TrafficClassConfig] {
        &self.classes
    }

    pub fn class(&self, class: ClassId) -> Option<&TrafficClassConfig> {
        self.classes.iter().find(|c| c.class == class)
    }

    /// Same class table under a different model. The table stays valid since
    /// validation does not depend on the model.
    pub fn with_model(&self, model: BamModel) -> ValidatedConfig {
        ValidatedConfig {
            model,
            ..self.clone()
        }
    }

    pub fn into_config(self) -> LinkBamConfig {
        LinkBamConfig {
            link: self.link,
            model: self.model,
            classes: self.classes,
        }
    }
}

/// Checks a link's class table against its bandwidth: the constraints must
/// not over-commit the link, priorities must be distinct and sharing limits
/// must lie in `[0, 1]`.
pub fn validate_link_config(
    config: &LinkBamConfig,
    capacity: Bandwidth,
) -> Result<ValidatedConfig, ConfigError> {
    let link = config.link;
    if capacity.is_zero() {
        return Err(ConfigError::ZeroCapacity(link));
    }
    if config.classes.is_empty() {
        return Err(ConfigError::NoClasses { link });
    }
    let mut classes = config.classes.clone();
    classes.sort_by_key(|c| c.class);
    for pair in classes.windows(2) {
        if pair[0].class == pair[1].class {
            return Err(ConfigError::DuplicateClass {
                link,
                class: pair[0].class,
            });
        }
    }
    for c in &classes {
        if !(0.0..=1.0).contains(&c.sharing_limit) {
            return Err(ConfigError::BadSharingLimit {
                link,
                class: c.class,
                value: c.sharing_limit,
            });
        }
    }
    let mut priorities: Vec<u32> = classes.iter().map(|c| c.priority).collect();
    priorities.sort_unstable();
    if let Some(pair) = priorities.windows(2).find(|p| p[0] == p[1]) {
        return Err(ConfigError::DuplicatePriority {
            link,
            priority: pair[0],
        });
    }
    let total: Bandwidth = classes.iter().map(|c| c.bc).sum();
    if total > capacity {
        return Err(ConfigError::OverCommitted {
            link,
            total,
            capacity,
        });
    }
    Ok(ValidatedConfig {
        link,
        model: config.model,
        capacity,
        classes,
    })
}

/// An LSP setup request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LspRequest {
    pub id: RequestId,
    pub user: UserId,
    pub class: ClassId,
    pub demand: Bandwidth,
    pub source: SwitchId,
    pub destination: SwitchId,
    /// Arrival time in milliseconds of simulated time.
    pub arrival_ms: u64,
    /// Holding time in milliseconds.
    pub holding_ms: u64,
}

impl LspRequest {
    /// Request on a bare link with no timing, as used by single-link callers.
    pub fn on_link(id: RequestId, class: u32, demand: Bandwidth, link: LinkId) -> Self {
        LspRequest {
            id,
            user: id,
            class: ClassId(class),
            demand,
            source: link.from,
            destination: link.to,
            arrival_ms: 0,
            holding_ms: 1,
        }
    }
}

/// Bandwidth drawn from one donor class's constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Share {
    pub donor: ClassId,
    pub amount: Bandwidth,
}

impl Share {
    pub fn new(donor: ClassId, amount: Bandwidth) -> Self {
        Share { donor, amount }
    }
}

/// Donor composition of one LSP on one link, one entry per donor.
pub type Breakdown = Vec<Share>;

/// `(sw_x, sw_y, l_xy)` path segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub from: SwitchId,
    pub to: SwitchId,
    pub link: LinkId,
}

impl Segment {
    pub fn of(link: LinkId) -> Self {
        Segment {
            from: link.from,
            to: link.to,
            link,
        }
    }
}

/// Realized end-to-end allocation of an accepted LSP.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LspAllocation {
    pub request: RequestId,
    pub class: ClassId,
    pub demand: Bandwidth,
    pub segments: Vec<Segment>,
    /// Per-segment donor breakdown, aligned with `segments`.
    pub breakdowns: Vec<Breakdown>,
}

impl LspAllocation {
    /// Segments concatenate and each breakdown is positive and sums to the demand.
    pub fn is_well_formed(&self) -> bool {
        let chained = self.segments.windows(2).all(|w| w[0].to == w[1].from);
        let segs_ok = self
            .segments
            .iter()
            .all(|s| s.link.from == s.from && s.link.to == s.to);
        let parts_ok = self.breakdowns.len() == self.segments.len()
            && self.breakdowns.iter().all(|b| {
                b.iter().all(|s| !s.amount.is_zero())
                    && b.iter().map(|s| s.amount).sum::<Bandwidth>() == self.demand
            });
        chained && segs_ok && parts_ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link() -> LinkId {
        LinkId::new(0, 1)
    }

    fn cfg(classes: Vec<TrafficClassConfig>) -> LinkBamConfig {
        LinkBamConfig {
            link: link(),
            model: BamModel::Atcs,
            classes,
        }
    }

    #[test]
    fn reference_constraints_validate() {
        let c = cfg(vec![
            TrafficClassConfig::new(0, 0, Bandwidth::from_mbps(250), 1.0),
            TrafficClassConfig::new(1, 1, Bandwidth::from_mbps(350), 1.0),
            TrafficClassConfig::new(2, 2, Bandwidth::from_mbps(400), 1.0),
        ]);
        let v = validate_link_config(&c, Bandwidth::from_mbps(1000)).unwrap();
        assert_eq!(v.classes().len(), 3);
    }

    #[test]
    fn over_commit_rejected() {
        let c = cfg(vec![
            TrafficClassConfig::new(0, 0, Bandwidth::from_mbps(600), 1.0),
            TrafficClassConfig::new(1, 1, Bandwidth::from_mbps(600), 1.0),
        ]);
        assert!(matches!(
            validate_link_config(&c, Bandwidth::from_mbps(1000)),
            Err(ConfigError::OverCommitted { .. })
        ));
    }

    #[test]
    fn single_full_class_is_valid() {
        let c = cfg(vec![TrafficClassConfig::new(0, 0, Bandwidth::from_mbps(1000), 0.0)]);
        assert!(validate_link_config(&c, Bandwidth::from_mbps(1000)).is_ok());
    }

    #[test]
    fn under_provisioning_allowed() {
        let c = cfg(vec![TrafficClassConfig::new(0, 0, Bandwidth::from_mbps(10), 0.5)]);
        assert!(validate_link_config(&c, Bandwidth::from_mbps(1000)).is_ok());
    }

    #[test]
    fn duplicate_priority_and_bad_sharing() {
        let c = cfg(vec![
            TrafficClassConfig::new(0, 3, Bandwidth::from_mbps(100), 1.0),
            TrafficClassConfig::new(1, 3, Bandwidth::from_mbps(100), 1.0),
        ]);
        assert_eq!(
            validate_link_config(&c, Bandwidth::from_mbps(1000)),
            Err(ConfigError::DuplicatePriority {
                link: link(),
                priority: 3
            })
        );
        let c = cfg(vec![TrafficClassConfig::new(0, 0, Bandwidth::from_mbps(100), 1.5)]);
        assert!(matches!(
            validate_link_config(&c, Bandwidth::from_mbps(1000)),
            Err(ConfigError::BadSharingLimit { .. })
        ));
        let c = cfg(vec![TrafficClassConfig::new(0, 0, Bandwidth::from_mbps(100), f64::NAN)]);
        assert!(matches!(
            validate_link_config(&c, Bandwidth::from_mbps(1000)),
            Err(ConfigError::BadSharingLimit { .. })
        ));
    }

    #[test]
    fn validation_is_order_insensitive_and_idempotent() {
        let a = vec![
            TrafficClassConfig::new(2, 2, Bandwidth::from_mbps(400), 1.0),
            TrafficClassConfig::new(0, 0, Bandwidth::from_mbps(250), 0.5),
            TrafficClassConfig::new(1, 1, Bandwidth::from_mbps(350), 0.0),
        ];
        let mut b = a.clone();
        b.reverse();
        let lb = Bandwidth::from_mbps(1000);
        let va = validate_link_config(&cfg(a), lb).unwrap();
        let vb = validate_link_config(&cfg(b), lb).unwrap();
        assert_eq!(va, vb);
        let again = validate_link_config(&va.clone().into_config(), lb).unwrap();
        assert_eq!(again, va);
    }

    #[test]
    fn partition_examples() {
        let p = |bc, s| partition(&TrafficClassConfig::new(0, 0, Bandwidth::from_mbps(bc), s));
        assert_eq!(p(400, 1.0), (Bandwidth::ZERO, Bandwidth::from_mbps(400)));
        assert_eq!(p(400, 0.0), (Bandwidth::from_mbps(400), Bandwidth::ZERO));
        assert_eq!(p(350, 0.5), (Bandwidth::from_mbps(175), Bandwidth::from_mbps(175)));
    }

    #[test]
    fn partition_sums_exactly() {
        for kbps in [1u64, 3, 7, 333, 999_999] {
            for s in [0.0, 0.1, 1.0 / 3.0, 0.5, 0.77, 1.0] {
                let c = TrafficClassConfig::new(0, 0, Bandwidth::from_kbps(kbps), s);
                let (private, public) = partition(&c);
                assert_eq!(private + public, c.bc);
            }
        }
    }

    #[test]
    fn graph_connectivity_matrix() {
        let g = NetworkGraph::bidirectional(0..3, [(0, 1, Bandwidth::from_mbps(10))]).unwrap();
        let c = g.connectivity();
        assert_eq!(c, vec![vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, 0]]);
        assert!(NetworkGraph::new(0..2, [(LinkId::new(0, 0), Bandwidth::from_mbps(1))]).is_err());
        assert!(NetworkGraph::new(0..2, [(LinkId::new(0, 1), Bandwidth::ZERO)]).is_err());
        assert_eq!(g.neighbours(0).collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn rdm_and_atcs_directions() {
        assert!(BamModel::Rdm.may_borrow(0, 2));
        assert!(!BamModel::Rdm.may_borrow(2, 0));
        assert!(BamModel::Atcs.may_borrow(2, 0));
        assert!(!BamModel::Mam.may_borrow(0, 2));
    }
}
