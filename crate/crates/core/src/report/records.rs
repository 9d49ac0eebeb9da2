//! Line-delimited JSON records, one trace per line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::AnnotatedTrace;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub schema_version: u32,
    /// Scenario name when the trace came from the simulator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub trace: AnnotatedTrace,
}

impl TraceRecord {
    pub fn new(trace: AnnotatedTrace, scenario: Option<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario,
            trace,
        }
    }
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: schema version {found}, expected {SCHEMA_VERSION}")]
    Version { line: usize, found: u32 },
    #[error("read failure: {0}")]
    Io(#[from] std::io::Error),
}

pub fn dump_record(record: &TraceRecord) -> String {
    serde_json::to_string(record).expect("trace records always serialize")
}

pub fn parse_record(line: &str) -> Result<TraceRecord, RecordError> {
    parse_line(line, 1)
}

fn parse_line(line: &str, n: usize) -> Result<TraceRecord, RecordError> {
    // Check the version before the body so that a newer schema fails clearly.
    #[derive(Deserialize)]
    struct Probe {
        schema_version: u32,
    }
    let v: Probe = serde_json::from_str(line).map_err(|e| RecordError::Malformed {
        line: n,
        msg: e.to_string(),
    })?;
    if v.schema_version != SCHEMA_VERSION {
        return Err(RecordError::Version {
            line: n,
            found: v.schema_version,
        });
    }
    serde_json::from_str(line).map_err(|e| RecordError::Malformed {
        line: n,
        msg: e.to_string(),
    })
}

pub fn write_records<'a>(
    mut w: impl Write,
    records: impl IntoIterator<Item = &'a TraceRecord>,
) -> std::io::Result<()> {
    for r in records {
        writeln!(w, "{}", dump_record(r))?;
    }
    Ok(())
}

/// Blank lines are skipped.
pub fn read_records(r: impl BufRead) -> Result<Vec<TraceRecord>, RecordError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_line(&line, i + 1)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_mismatch_is_reported() {
        let t = AnnotatedTrace::new("192.0.2.1".parse().unwrap(), 7);
        let mut r = TraceRecord::new(t, None);
        r.schema_version = 99;
        let line = dump_record(&r);
        assert!(matches!(
            parse_record(&line),
            Err(RecordError::Version { found: 99, .. })
        ));
        assert!(matches!(
            parse_record("{"),
            Err(RecordError::Malformed { .. })
        ));
    }

    #[test]
    fn empty_trace_round_trips() {
        let t = AnnotatedTrace::new("192.0.2.1".parse().unwrap(), 7);
        let r = TraceRecord::new(t, Some("x".into()));
        assert_eq!(parse_record(&dump_record(&r)).unwrap(), r);
    }
}
