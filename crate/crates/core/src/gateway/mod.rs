//! Role-typed language-model access.
//!
//! A [`Gateway`] pairs a backend with per-role prompt settings and logs every
//! exchange so a session can be replayed verbatim later.

mod http;
mod prompts;
mod scripted;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{GatewayError, RenderError};

pub use http::{HttpBackend, HttpConfig, RetryPolicy, API_KEY_ENV};
pub use prompts::{demonstration_count, instruction, render_prompt};
pub use scripted::{Transcript, TranscriptFile, SENTINEL_RESPONSE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleName {
    KgGenerate,
    KgEdit,
    KgReason,
    TableGenerate,
    TableEdit,
    TableReason,
}

impl RoleName {
    pub const ALL: [RoleName; 6] = [
        RoleName::KgGenerate,
        RoleName::KgEdit,
        RoleName::KgReason,
        RoleName::TableGenerate,
        RoleName::TableEdit,
        RoleName::TableReason,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoleName::KgGenerate => "kg_generate",
            RoleName::KgEdit => "kg_edit",
            RoleName::KgReason => "kg_reason",
            RoleName::TableGenerate => "table_generate",
            RoleName::TableEdit => "table_edit",
            RoleName::TableReason => "table_reason",
        }
    }

    /// Default demonstration count.
    pub fn default_shots(self) -> usize {
        match self {
            RoleName::KgGenerate => 6,
            RoleName::KgEdit | RoleName::KgReason => 5,
            RoleName::TableGenerate | RoleName::TableReason => 7,
            RoleName::TableEdit => 2,
        }
    }
}

impl fmt::Display for RoleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoleName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RoleName::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown role {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Role {
    pub name: RoleName,
    pub shot_count: usize,
    pub template_id: String,
}

impl Role {
    pub fn new(name: RoleName) -> Self {
        Self {
            name,
            shot_count: name.default_shots(),
            template_id: name.as_str().to_owned(),
        }
    }

    pub fn with_shots(mut self, shots: usize) -> Self {
        self.shot_count = shots;
        self
    }
}

/// Shot counts for every role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleProfile {
    roles: BTreeMap<RoleName, Role>,
}

impl Default for RoleProfile {
    fn default() -> Self {
        Self {
            roles: RoleName::ALL.into_iter().map(|r| (r, Role::new(r))).collect(),
        }
    }
}

impl RoleProfile {
    pub fn role(&self, name: RoleName) -> &Role {
        &self.roles[&name]
    }

    pub fn set_shots(&mut self, name: RoleName, shots: usize) {
        self.roles.insert(name, Role::new(name).with_shots(shots));
    }
}

/// Something that turns a rendered prompt into raw model text.
pub trait Backend: Send + Sync {
    fn complete(&self, role: &Role, prompt: &str, temperature: f64) -> Result<String, GatewayError>;
}

/// One prompt/response exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayCall {
    pub role: RoleName,
    pub prompt: String,
    pub response: String,
}

/// Backend plus prompt settings plus a call log. One gateway serves one
/// session; its log becomes part of that session's trace.
pub struct Gateway<'a> {
    backend: &'a dyn Backend,
    profile: RoleProfile,
    temperature: f64,
    log: Mutex<Vec<GatewayCall>>,
}

impl<'a> Gateway<'a> {
    pub fn new(backend: &'a dyn Backend, profile: RoleProfile, temperature: f64) -> Self {
        Self {
            backend,
            profile,
            temperature,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn render(&self, role: RoleName, slots: &BTreeMap<&str, String>) -> Result<String, RenderError> {
        render_prompt(self.profile.role(role), slots)
    }

    /// Render, send, and log. Failed calls are not logged.
    pub fn call(&self, role: RoleName, slots: &BTreeMap<&str, String>) -> Result<String, GatewayError> {
        let role = self.profile.role(role);
        let prompt = render_prompt(role, slots)?;
        let response = self.backend.complete(role, &prompt, self.temperature)?;
        self.log.lock().expect("gateway log poisoned").push(GatewayCall {
            role: role.name,
            prompt,
            response: response.clone(),
        });
        Ok(response)
    }

    pub fn take_calls(&self) -> Vec<GatewayCall> {
        std::mem::take(&mut *self.log.lock().expect("gateway log poisoned"))
    }
}
