//! Chat-completion HTTP backend with retry on transient failures.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use super::{instruction, Backend, Role};
use crate::error::GatewayError;

/// Bearer token source.
pub const API_KEY_ENV: &str = "READI_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub base_backoff: Duration,
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based): base * 2^(attempt-1), capped.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt.saturating_sub(1)).unwrap_or(u32::MAX);
        self.base_backoff
            .checked_mul(factor)
            .unwrap_or(self.max_backoff)
            .min(self.max_backoff)
    }
}

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub retry: RetryPolicy,
}

impl HttpConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            timeout: Duration::from_secs(120),
            retry: RetryPolicy::default(),
        }
    }

    fn endpoint(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_owned()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 2],
    temperature: f64,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

pub struct HttpBackend {
    client: reqwest::blocking::Client,
    config: HttpConfig,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, reqwest::Error> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()?;
        Ok(Self { client, config })
    }

    fn is_transient_status(status: reqwest::StatusCode) -> bool {
        status.as_u16() == 429 || status.is_server_error()
    }
}

impl Backend for HttpBackend {
    fn complete(&self, role: &Role, prompt: &str, temperature: f64) -> Result<String, GatewayError> {
        let body = ChatRequest {
            model: &self.config.model,
            messages: [
                ChatMessage {
                    role: "system",
                    content: instruction(role.name),
                },
                ChatMessage {
                    role: "user",
                    content: prompt,
                },
            ],
            temperature,
        };
        let url = self.config.endpoint();
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            let mut req = self.client.post(&url).json(&body);
            if let Some(key) = &self.config.api_key {
                req = req.bearer_auth(key);
            }
            let failure = match req.send() {
                Ok(resp) if resp.status().is_success() => {
                    let parsed: ChatResponse =
                        resp.json().map_err(|e| GatewayError::MalformedResponse {
                            role: role.name,
                            message: e.to_string(),
                        })?;
                    return parsed
                        .choices
                        .into_iter()
                        .next()
                        .and_then(|c| c.message.content)
                        .ok_or_else(|| GatewayError::MalformedResponse {
                            role: role.name,
                            message: "no choices[0].message.content".into(),
                        });
                }
                Ok(resp) => {
                    let status = resp.status();
                    let body = resp.text().unwrap_or_default();
                    let err = GatewayError::Status {
                        role: role.name,
                        status: status.as_u16(),
                        attempts: attempt,
                        body,
                    };
                    if !Self::is_transient_status(status) {
                        return Err(err);
                    }
                    err
                }
                Err(e) => GatewayError::Transport {
                    role: role.name,
                    attempts: attempt,
                    message: e.to_string(),
                },
            };
            if attempt > self.config.retry.max_retries {
                warn!(role = %role.name, attempt, "giving up: {failure}");
                return Err(failure);
            }
            let delay = self.config.retry.backoff(attempt);
            debug!(role = %role.name, attempt, ?delay, "retrying: {failure}");
            thread::sleep(delay);
        }
    }
}
