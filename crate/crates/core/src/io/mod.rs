//! Scenario files, event files and result exports.

mod events;
mod export;
mod scenario;
mod transparency;

use std::path::Path;

use thiserror::Error;

use crate::model::ConfigError;
use crate::path::PathError;

pub use events::{read_events, read_events_str, write_events, write_events_string, EVENTS_SCHEMA};
pub use export::{
    rounded_json, summary_json, table_csv, table_json, time_series_csv, ComparisonTable, TableColumn,
};
pub use scenario::{
    bundled, emit_scenario, parse_scenario, parse_scenario_str, to_file, ClassEntry, LinkOverride,
    PathEntry, PathsSpec, PhaseEntry, ScenarioFile, TopologyFile, TopologyLink, TopologyRef,
    UserEntry, WorkloadFile, BUNDLED,
};
pub use transparency::{transparency_report, ClassDisclosure, LinkDisclosure, TransparencyReport};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{file}: {message}")]
    Parse { file: String, message: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("invalid scenario: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid scenario: {0}")]
    Path(#[from] PathError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("events file: {0}")]
    Events(String),
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Whether the error comes from the content of an input rather than
    /// from reading or writing it.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, IoError::Io { .. })
    }
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| IoError::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| IoError::io(path, e))
}
