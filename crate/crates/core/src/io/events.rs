//! Events file: CSV with a commented header.
//!
//! ```text
//! # bwbroker-events v1
//! # scenario: scenario1
//! # model: atcs
//! # seed: 7
//! # duration_ms: 18000000
//! # rng: ChaCha8Rng ...
//! time_ms,kind,request,class,bw_kbps,links,phase,cause,site,breakdown
//! 1532,arrival,1,2,11042,0>1,1,,,
//! 1532,accept,1,2,11042,0>1,1,,,2:11042
//! ```
//!
//! `class` is the numeric class id and `phase` is 1-based. `links` and
//! `breakdown` separate links with `;`; a breakdown lists `donor:kbps`
//! shares joined by `/`. `cause` and `site` are filled for reclaims (the
//! admitting request and the contested link) and `site` for blocks.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::model::{Bandwidth, Breakdown, ClassId, LinkId, Share};
use crate::sim::{EventLog, EventRecord, LogHeader};

pub const EVENTS_SCHEMA: &str = "bwbroker-events v1";

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    time_ms: u64,
    kind: String,
    request: u64,
    class: u32,
    bw_kbps: u64,
    links: String,
    phase: usize,
    cause: Option<u64>,
    site: Option<String>,
    breakdown: String,
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>, sep: &str) -> String {
    items
        .into_iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(sep)
}

fn row(r: &EventRecord) -> Row {
    Row {
        time_ms: r.time_ms,
        kind: r.kind.to_string(),
        request: r.request,
        class: r.class.0,
        bw_kbps: r.bandwidth.kbps(),
        links: join(&r.links, ";"),
        phase: r.phase,
        cause: r.cause,
        site: r.site.map(|s| s.to_string()),
        breakdown: join(
            r.breakdown
                .iter()
                .map(|b| join(b.iter().map(|s| format!("{}:{}", s.donor.0, s.amount.kbps())), "/")),
            ";",
        ),
    }
}

fn split(s: &str, sep: char) -> impl Iterator<Item = &str> {
    s.split(sep).filter(|p| !p.is_empty())
}

fn record(row: Row) -> Result<EventRecord, String> {
    let links = split(&row.links, ';')
        .map(str::parse)
        .collect::<Result<Vec<LinkId>, _>>()?;
    let breakdown = split(&row.breakdown, ';')
        .map(|b| {
            split(b, '/')
                .map(|share| {
                    let (donor, kbps) = share
                        .split_once(':')
                        .ok_or_else(|| format!("bad share `{share}`"))?;
                    let donor = donor.parse().map_err(|_| format!("bad donor in `{share}`"))?;
                    let kbps = kbps.parse().map_err(|_| format!("bad amount in `{share}`"))?;
                    Ok(Share::new(ClassId(donor), Bandwidth::from_kbps(kbps)))
                })
                .collect::<Result<Breakdown, String>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EventRecord {
        time_ms: row.time_ms,
        kind: row.kind.parse()?,
        request: row.request,
        class: ClassId(row.class),
        bandwidth: Bandwidth::from_kbps(row.bw_kbps),
        links,
        phase: row.phase,
        cause: row.cause,
        site: row.site.as_deref().map(str::parse).transpose()?,
        breakdown,
    })
}

pub fn write_events_string(log: &EventLog) -> String {
    let h = &log.header;
    let mut out = format!(
        "# {EVENTS_SCHEMA}\n# scenario: {}\n# model: {}\n# seed: {}\n# duration_ms: {}\n# rng: {}\n",
        h.scenario, h.model, h.seed, h.duration_ms, h.rng
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &log.records {
        w.serialize(row(r)).expect("in-memory csv write");
    }
    // An empty log still gets its column header.
    if log.records.is_empty() {
        w.write_record([
            "time_ms", "kind", "request", "class", "bw_kbps", "links", "phase", "cause", "site",
            "breakdown",
        ])
        .expect("in-memory csv write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"));
    out
}

pub fn write_events(path: &Path, log: &EventLog) -> Result<(), IoError> {
    super::write_file(path, write_events_string(log).as_bytes())
}

pub fn read_events_str(text: &str) -> Result<EventLog, IoError> {
    let bad = |m: String| IoError::Events(m);
    let mut header = LogHeader {
        scenario: String::new(),
        model: String::new(),
        seed: 0,
        duration_ms: 0,
        rng: String::new(),
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l.trim_start_matches('#').trim() == EVENTS_SCHEMA => {}
        other => {
            return Err(bad(format!(
                "expected `# {EVENTS_SCHEMA}` on the first line, found {other:?}"
            )))
        }
    }
    for line in text.lines().take_while(|l| l.starts_with('#')).skip(1) {
        let Some((key, value)) = line.trim_start_matches('#').split_once(':') else {
            continue;
        };
        let value = value.trim().to_string();
        match key.trim() {
            "scenario" => header.scenario = value,
            "model" => header.model = value,
            "seed" => header.seed = value.parse().map_err(|_| bad(format!("bad seed `{value}`")))?,
            "duration_ms" => {
                header.duration_ms = value
                    .parse()
                    .map_err(|_| bad(format!("bad duration `{value}`")))?
            }
            "rng" => header.rng = value,
            _ => {}
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| bad(format!("record {}: {e}", i + 1)))?;
        records.push(record(row).map_err(|e| bad(format!("record {}: {e}", i + 1)))?);
    }
    Ok(EventLog { header, records })
}

pub fn read_events(path: &Path) -> Result<EventLog, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    read_events_str(&text)
}
