use std::collections::{BTreeMap, VecDeque};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{Backend, GatewayCall, Role, RoleName};
use crate::error::GatewayError;

/// Returned on underflow when the transcript is not strict.
pub const SENTINEL_RESPONSE: &str = "<no scripted response>";

fn default_strict() -> bool {
    true
}

/// On-disk transcript: `{"roles": {"kg_generate": ["…"], …}, "strict": true}`.
/// A file may instead (or additionally) carry per-question transcripts under
/// `"sessions"`, keyed by dataset id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptFile {
    #[serde(default)]
    pub roles: BTreeMap<RoleName, Vec<String>>,
    #[serde(default = "default_strict")]
    pub strict: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sessions: BTreeMap<String, TranscriptFile>,
}

/// Order-keyed replay backend: each call pops the next canned response for
/// its role, ignoring the prompt.
#[derive(Debug)]
pub struct Transcript {
    queues: Mutex<BTreeMap<RoleName, VecDeque<String>>>,
    strict: bool,
}

impl Transcript {
    pub fn new(strict: bool) -> Self {
        Self {
            queues: Mutex::new(BTreeMap::new()),
            strict,
        }
    }

    pub fn push(self, role: RoleName, response: impl Into<String>) -> Self {
        self.queues
            .lock()
            .expect("transcript poisoned")
            .entry(role)
            .or_default()
            .push_back(response.into());
        self
    }

    pub fn from_file(file: &TranscriptFile) -> Self {
        let queues = file
            .roles
            .iter()
            .map(|(r, v)| (*r, v.iter().cloned().collect()))
            .collect();
        Self {
            queues: Mutex::new(queues),
            strict: file.strict,
        }
    }

    /// Rebuild the queues from a recorded call log.
    pub fn from_calls<'a>(calls: impl IntoIterator<Item = &'a GatewayCall>) -> Self {
        calls
            .into_iter()
            .fold(Self::new(true), |t, c| t.push(c.role, c.response.clone()))
    }

    pub fn remaining(&self, role: RoleName) -> usize {
        self.queues
            .lock()
            .expect("transcript poisoned")
            .get(&role)
            .map_or(0, VecDeque::len)
    }
}

impl Backend for Transcript {
    fn complete(&self, role: &Role, _prompt: &str, _temperature: f64) -> Result<String, GatewayError> {
        let next = self
            .queues
            .lock()
            .expect("transcript poisoned")
            .get_mut(&role.name)
            .and_then(VecDeque::pop_front);
        match next {
            Some(text) => Ok(text),
            None if self.strict => Err(GatewayError::TranscriptExhausted { role: role.name }),
            None => Ok(SENTINEL_RESPONSE.to_owned()),
        }
    }
}
