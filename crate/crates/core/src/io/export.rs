//! Result exports. Numbers are written with two decimals; undefined rates
//! are `N/A` in CSV and `null` in JSON.

use serde::Serialize;
use serde_json::Value;

use crate::metrics::{Bucket, ModelAverage, MetricsSummary};
use crate::model::ClassId;

/// One model's averaged results, labelled for display.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableColumn {
    pub label: String,
    pub average: ModelAverage,
}

/// Side-by-side comparison of models: per-class utilization and block rate
/// with their means, followed by reclaim figures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub columns: Vec<TableColumn>,
}

fn fmt2(v: Option<f64>) -> String {
    v.map_or_else(|| "N/A".to_string(), |v| format!("{v:.2}"))
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => n
            .as_f64()
            .and_then(|f| serde_json::Number::from_f64(round2(f)))
            .map_or(Value::Null, Value::Number),
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with every float rounded to two decimals.
fn to_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("result types serialize");
    let mut s = serde_json::to_string_pretty(&round_floats(v)).expect("json value serializes");
    s.push('\n');
    s
}

impl ComparisonTable {
    fn classes(&self) -> Vec<ClassId> {
        self.columns
            .first()
            .map(|c| c.average.classes.iter().map(|c| c.class).collect())
            .unwrap_or_default()
    }

    fn row(&self, label: String, f: impl Fn(&ModelAverage) -> Option<f64>) -> (String, Vec<Option<f64>>) {
        (label, self.columns.iter().map(|c| f(&c.average)).collect())
    }

    /// `(row label, one value per column)`.
    pub fn rows(&self) -> Vec<(String, Vec<Option<f64>>)> {
        let classes = self.classes();
        let mut rows = Vec::new();
        for &c in &classes {
            rows.push(self.row(format!("Utilization {c}"), |a| a.class(c).map(|x| x.utilization)));
        }
        rows.push(self.row("Utilization Mean".into(), |a| Some(a.mean_utilization)));
        for &c in &classes {
            rows.push(self.row(format!("Block rate {c}"), |a| a.class(c).and_then(|x| x.block_rate)));
        }
        rows.push(self.row("Block rate Mean".into(), |a| a.mean_block_rate));
        rows.push(self.row("Link utilization".into(), |a| Some(a.link_utilization)));
        rows.push(self.row("Preempted LSPs %".into(), |a| a.preemption_pct));
        rows.push(self.row("Devolved LSPs %".into(), |a| a.devolution_pct));
        rows.push(self.row("Preemptions per hour".into(), |a| Some(a.preemptions_per_hour)));
        rows.push(self.row("Devolutions per hour".into(), |a| Some(a.devolutions_per_hour)));
        rows
    }
}

pub fn table_csv(table: &ComparisonTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["metric".to_string()];
    header.extend(table.columns.iter().map(|c| c.label.clone()));
    w.write_record(&header).expect("in-memory csv write");
    for (label, values) in table.rows() {
        let mut rec = vec![label];
        rec.extend(values.into_iter().map(fmt2));
        w.write_record(&rec).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn table_json(table: &ComparisonTable) -> String {
    to_json(table)
}

pub fn summary_json(summary: &MetricsSummary) -> String {
    to_json(summary)
}

/// One row per bucket: start/end in seconds, then per class utilization,
/// arrivals, blocks, block rate, preemptions and devolutions, then link
/// utilization.
pub fn time_series_csv(buckets: &[Bucket]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let classes: Vec<ClassId> = buckets
        .first()
        .map(|b| b.classes.iter().map(|c| c.class).collect())
        .unwrap_or_default();
    let mut header = vec!["start_s".to_string(), "end_s".to_string()];
    for c in &classes {
        for m in ["util", "arrivals", "blocks", "block_rate", "preemptions", "devolutions"] {
            header.push(format!("{m}_{c}"));
        }
    }
    header.push("link_util".to_string());
    w.write_record(&header).expect("in-memory csv write");
    for b in buckets {
        let mut rec = vec![
            format!("{:.2}", b.start_ms as f64 / 1000.0),
            format!("{:.2}", b.end_ms as f64 / 1000.0),
        ];
        for c in &b.classes {
            rec.push(format!("{:.2}", c.utilization));
            rec.push(c.arrivals.to_string());
            rec.push(c.blocks.to_string());
            rec.push(fmt2(c.block_rate()));
            rec.push(c.preemptions.to_string());
            rec.push(c.devolutions.to_string());
        }
        rec.push(format!("{:.2}", b.link_utilization));
        w.write_record(&rec).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Pretty JSON of any result type, floats rounded to two decimals.
pub fn rounded_json<T: Serialize>(value: &T) -> String {
    to_json(value)
}
