//! Bandwidth broker for label switched paths.
//!
//! Links run one of the bandwidth allocation models in [`bam`]; [`path`]
//! composes them into end-to-end LSP admission; [`sim`] drives the network
//! with seeded Poisson workloads and records an event log that [`metrics`]
//! turns into utilization/blocking figures; [`conformance`] checks logs
//! and engines against traffic-management requirements. Scenario files
//! and exports live in [`io`].

pub mod bam;
pub mod conformance;
pub mod io;
pub mod metrics;
pub mod model;
pub mod path;
pub mod sim;

pub use bam::{
    AdmissionEngine, AdmitDecision, AdmitOutcome, BamError, ClassUsage, LinkState, ReclaimEvent,
    ReclaimKind,
};
pub use model::{
    partition, validate_link_config, BamModel, Bandwidth, Breakdown, ClassId, ConfigError,
    LinkBamConfig, LinkId, LspAllocation, LspRequest, NetworkGraph, RequestId, Segment, Share,
    SwitchId, TrafficClassConfig, ValidatedConfig,
};
pub use path::{LinkReclaim, Network, PathDecision, PathError, PathTable};
pub use conformance::{
    check_exceptionality, check_non_discrimination, compare_proportionality, ConformanceError,
    ConformanceReport, ProportionalityReport, Requirement, Verdict,
};
pub use metrics::{average, summarize, time_series, MetricsSummary, ModelAverage};
pub use sim::{
    run, simulate, workload, EventKind, EventLog, EventRecord, PhaseProfile, Scenario, SimError,
    SimOutput,
};
