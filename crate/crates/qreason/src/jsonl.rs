//! Trace and metric-log streams, one JSON object per line.

use std::fs;
use std::path::Path;

use qreason_core::eval::TraceRecord;
use qreason_core::train::EpochLog;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{io, Error, Result};

pub fn render_lines<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("records always serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_lines<T: DeserializeOwned>(text: &str, path: &Path) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Record {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn render_trace(record: &TraceRecord) -> String {
    serde_json::to_string(record).expect("trace records always serialize")
}

pub fn parse_trace(line: &str) -> Result<TraceRecord> {
    serde_json::from_str(line).map_err(|e| Error::Other(format!("bad trace record: {e}")))
}

pub fn write_traces(path: &Path, records: &[TraceRecord]) -> Result<()> {
    fs::write(path, render_lines(records)).map_err(io(path))
}

pub fn read_traces(path: &Path) -> Result<Vec<TraceRecord>> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    parse_lines(&text, path)
}

pub fn write_metric_log(path: &Path, log: &[EpochLog]) -> Result<()> {
    fs::write(path, render_lines(log)).map_err(io(path))
}

pub fn read_metric_log(path: &Path) -> Result<Vec<EpochLog>> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    parse_lines(&text, path)
}
