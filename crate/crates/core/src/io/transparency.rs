//! Public disclosure of a scenario's traffic-management configuration.
//! Built from the scenario alone; nothing here depends on a run.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{partition, BamModel, Bandwidth, ClassId, LinkId};
use crate::sim::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDisclosure {
    pub class: ClassId,
    pub name: String,
    pub traffic: String,
    pub priority: u32,
    pub bc: Bandwidth,
    pub bc_percent: f64,
    pub sharing_percent: f64,
    pub public: Bandwidth,
    pub private: Bandwidth,
    /// Classes whose public share this class may borrow.
    pub borrows_from: Vec<ClassId>,
    pub users: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkDisclosure {
    pub link: LinkId,
    pub capacity: Bandwidth,
    pub model: BamModel,
    /// Whether the link uses the same class table as the reference link.
    pub standard_classes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransparencyReport {
    pub scenario: String,
    pub reference_link: LinkId,
    pub model: BamModel,
    pub class_count: usize,
    pub classes: Vec<ClassDisclosure>,
    pub links: Vec<LinkDisclosure>,
    pub reclaim_policy: String,
}

fn model_text(model: BamModel) -> &'static str {
    match model {
        BamModel::Mam => "MAM: each class uses only its own bandwidth constraint; nothing is shared.",
        BamModel::Rdm => {
            "RDM: a class may borrow the public share of strictly higher-priority classes; \
             owners reclaim lent bandwidth when their own demand needs it."
        }
        BamModel::Atcs => {
            "ATCS: a class may borrow the public share of any other class; owners reclaim \
             lent bandwidth when their own demand needs it."
        }
        BamModel::Frfs => {
            "FRFS: all requests draw from one pool in arrival order; classes are not separated."
        }
    }
}

const RECLAIM_POLICY: &str = "Lent bandwidth is reclaimed only when an owner's arriving request \
cannot be served from its own free bandwidth plus borrowable public shares, and taking back lent \
bandwidth would make it fit. Only the shortfall is taken back when that suffices. Borrowers are \
chosen lowest priority first, most recent first, fewest LSPs possible. A chosen LSP is first moved \
to other free bandwidth (devolution); if none exists it is torn down end to end (preemption), but \
only when the owner has higher priority than the borrower. Higher-priority borrowers can only be \
devolved.";

pub fn transparency_report(scenario: &Scenario) -> TransparencyReport {
    let reference = scenario
        .link_config(scenario.observed_link)
        .expect("observed link is configured");
    let model = reference.model();
    let capacity = reference.capacity().kbps().max(1) as f64;
    let classes = reference
        .classes()
        .iter()
        .map(|c| {
            let spec = scenario.classes.iter().find(|s| s.id == c.class);
            let (private, public) = partition(c);
            let borrows_from = reference
                .classes()
                .iter()
                .filter(|d| {
                    model != BamModel::Frfs
                        && d.class != c.class
                        && model.may_borrow(c.priority, d.priority)
                })
                .map(|d| d.class)
                .collect();
            ClassDisclosure {
                class: c.class,
                name: spec.map(|s| s.name.clone()).unwrap_or_default(),
                traffic: spec.map(|s| s.traffic.clone()).unwrap_or_default(),
                priority: c.priority,
                bc: c.bc,
                bc_percent: 100.0 * c.bc.kbps() as f64 / capacity,
                sharing_percent: 100.0 * c.sharing_limit,
                public,
                private,
                borrows_from,
                users: scenario
                    .users
                    .iter()
                    .filter(|u| u.class == c.class)
                    .map(|u| u.name.clone())
                    .collect(),
            }
        })
        .collect();
    let links = scenario
        .links
        .iter()
        .map(|l| LinkDisclosure {
            link: l.link(),
            capacity: l.capacity(),
            model: l.model(),
            standard_classes: l.classes().iter().zip(reference.classes()).all(|(a, b)| {
                a.class == b.class
                    && a.priority == b.priority
                    && a.sharing_limit == b.sharing_limit
                    && a.bc.kbps() as f64 / l.capacity().kbps() as f64
                        == b.bc.kbps() as f64 / reference.capacity().kbps() as f64
            }) && l.classes().len() == reference.classes().len(),
        })
        .collect();
    TransparencyReport {
        scenario: scenario.name.clone(),
        reference_link: reference.link(),
        model,
        class_count: reference.classes().len(),
        classes,
        links,
        reclaim_policy: RECLAIM_POLICY.to_string(),
    }
}

impl TransparencyReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Traffic management disclosure: {}", self.scenario);
        let _ = writeln!(s);
        let _ = writeln!(s, "Allocation model: {}", model_text(self.model));
        let _ = writeln!(
            s,
            "Traffic classes: {} (larger priority number = higher priority)",
            self.class_count
        );
        let _ = writeln!(s, "Reference link: {}", self.reference_link);
        for c in &self.classes {
            let _ = writeln!(s);
            let title = if c.name.is_empty() {
                c.class.to_string()
            } else {
                format!("{} ({})", c.class, c.name)
            };
            let _ = writeln!(s, "{title}");
            if !c.traffic.is_empty() {
                let _ = writeln!(s, "  traffic:        {}", c.traffic);
            }
            let _ = writeln!(s, "  priority:       {}", c.priority);
            let _ = writeln!(s, "  bandwidth:      {} ({:.2}% of link)", c.bc, c.bc_percent);
            let _ = writeln!(
                s,
                "  sharing limit:  {:.2}% (public {}, private {})",
                c.sharing_percent, c.public, c.private
            );
            let borrows = if c.borrows_from.is_empty() {
                "none".to_string()
            } else {
                c.borrows_from
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            let _ = writeln!(s, "  may borrow from: {borrows}");
            let users = if c.users.is_empty() {
                "none listed".to_string()
            } else {
                c.users.join(", ")
            };
            let _ = writeln!(s, "  users:          {users}");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "Reclaim policy: {}", self.reclaim_policy);
        let _ = writeln!(s);
        let odd: Vec<&LinkDisclosure> = self
            .links
            .iter()
            .filter(|l| l.model != self.model || !l.standard_classes)
            .collect();
        let _ = writeln!(
            s,
            "Links: {} configured, {} with the reference model and class table",
            self.links.len(),
            self.links.len() - odd.len()
        );
        for l in odd {
            let _ = writeln!(
                s,
                "  {}: {} capacity {}{}",
                l.link,
                l.model,
                l.capacity,
                if l.standard_classes { "" } else { ", own class table" }
            );
        }
        s
    }
}
