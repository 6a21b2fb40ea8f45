use std::path::PathBuf;

use thiserror::Error;

use crate::gateway::RoleName;

#[derive(Debug, Error)]
pub enum KgError {
    #[error("failed to read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: conflicting name for id {id:?}")]
    ConflictingName {
        path: PathBuf,
        line: usize,
        id: String,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IndexError {
    #[error("cannot build a relation index over an empty vocabulary")]
    EmptyVocabulary,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PathParseError {
    #[error("no \"Path:\" block in model output")]
    MissingPathBlock,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("template {template} is missing slot {slot:?}")]
    MissingSlot { template: String, slot: String },
    #[error("template {template} has {available} demonstrations, {requested} requested")]
    NotEnoughDemonstrations {
        template: String,
        available: usize,
        requested: usize,
    },
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("scripted transcript exhausted for role {role}")]
    TranscriptExhausted { role: RoleName },
    #[error("{role}: HTTP status {status} after {attempts} attempt(s): {body}")]
    Status {
        role: RoleName,
        status: u16,
        attempts: u32,
        body: String,
    },
    #[error("{role}: transport failure after {attempts} attempt(s): {message}")]
    Transport {
        role: RoleName,
        attempts: u32,
        message: String,
    },
    #[error("{role}: malformed response: {message}")]
    MalformedResponse { role: RoleName, message: String },
    #[error(transparent)]
    Render(#[from] RenderError),
}

#[derive(Debug, Error)]
pub enum TableLoadError {
    #[error("failed to read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid table JSON")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("duplicate header {0:?}")]
    DuplicateHeader(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UsageError {
    #[error("feedback requested for outcomes without any error")]
    NoError,
    #[error("a session needs at least one topic entity")]
    NoTopicEntities,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: invalid JSON record")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}:{line}: record {id:?} has no gold answers")]
    NoAnswers {
        path: PathBuf,
        line: usize,
        id: String,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("traces and gold records do not align; traces without gold: {traces_without_gold:?}, gold without traces: {gold_without_traces:?}")]
    Misaligned {
        traces_without_gold: Vec<String>,
        gold_without_traces: Vec<String>,
    },
}
