//! Trace JSONL (one session per line) and dataset JSONL.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::DatasetError;
use crate::gateway::GatewayCall;
use crate::session::SessionTrace;
use crate::table_session::TableSessionTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum TraceRecord {
    Kg(SessionTrace),
    Table(TableSessionTrace),
}

impl TraceRecord {
    pub fn id(&self) -> &str {
        match self {
            TraceRecord::Kg(t) => &t.id,
            TraceRecord::Table(t) => &t.id,
        }
    }

    pub fn answers(&self) -> &[String] {
        match self {
            TraceRecord::Kg(t) => &t.answers,
            TraceRecord::Table(t) => &t.answers,
        }
    }

    pub fn edit_calls(&self) -> usize {
        match self {
            TraceRecord::Kg(t) => t.edit_calls,
            TraceRecord::Table(t) => t.edit_calls,
        }
    }

    pub fn calls(&self) -> &[GatewayCall] {
        match self {
            TraceRecord::Kg(t) => &t.calls,
            TraceRecord::Table(t) => &t.calls,
        }
    }
}

pub fn write_traces<W: Write>(mut w: W, traces: &[TraceRecord]) -> io::Result<()> {
    for t in traces {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_traces(path: &Path) -> Result<Vec<TraceRecord>, DatasetError> {
    read_jsonl(path)
}

/// One dataset row. KGQA rows carry topic entities; TableQA rows a table id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub id: String,
    pub question: String,
    #[serde(default)]
    pub topic_entities: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_id: Option<String>,
    /// Gold answers; any alias of the right answer may be listed.
    pub answers: Vec<String>,
}

pub fn read_dataset(path: &Path) -> Result<Vec<GoldRecord>, DatasetError> {
    let records: Vec<GoldRecord> = read_jsonl(path)?;
    // line numbers line up because read_jsonl skips nothing but blank lines
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let lines: Vec<usize> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, _)| i + 1)
        .collect();
    for (r, line) in records.iter().zip(lines) {
        if r.answers.is_empty() {
            return Err(DatasetError::NoAnswers {
                path: path.to_path_buf(),
                line,
                id: r.id.clone(),
            });
        }
    }
    Ok(records)
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| DatasetError::Json {
                path: path.to_path_buf(),
                line: i + 1,
                source,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        fs::write(
            &p,
            "{\"id\":\"q1\",\"question\":\"?\",\"topic_entities\":[\"France\"],\"answers\":[\"Germany\"]}\n\n\
             {\"id\":\"t1\",\"question\":\"?\",\"table_id\":\"lakes\",\"answers\":[\"x\"]}\n",
        )
        .unwrap();
        let rows = read_dataset(&p).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].table_id.as_deref(), Some("lakes"));

        fs::write(&p, "{\"id\":\"q1\",\"question\":\"?\",\"answers\":[]}\n").unwrap();
        assert!(matches!(read_dataset(&p), Err(DatasetError::NoAnswers { line: 1, .. })));

        fs::write(&p, "{\"id\":\"q1\"}\n").unwrap();
        assert!(matches!(read_dataset(&p), Err(DatasetError::Json { line: 1, .. })));
    }
}
