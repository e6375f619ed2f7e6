//! Chat-completion transport.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable holding the bearer token for the endpoint.
pub const API_KEY_ENV: &str = "MORALNET_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    /// Normalized cue, for backends that key on it.
    pub cue: String,
    pub trial_id: u64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BackendError {
    /// Timeouts, connection resets, 429 and 5xx responses.
    #[error("transient failure: {0}")]
    Retryable(String),
    #[error("request rejected: {0}")]
    Permanent(String),
}

/// Anything that can turn a chat request into completion text.
pub trait ChatBackend: Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError>;
}

impl<F> ChatBackend for F
where
    F: Fn(&CompletionRequest) -> Result<String, BackendError> + Sync,
{
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        self(request)
    }
}

/// OpenAI-style `/chat/completions` client.
pub struct HttpBackend {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
}

#[derive(Serialize)]
struct RequestBody<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    n: u32,
}

#[derive(Deserialize)]
struct ResponseBody {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChatMessage,
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, timeout: Duration, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Self { agent, endpoint: endpoint.into(), api_key }
    }

    /// Reads the key from [`API_KEY_ENV`] when set.
    pub fn from_env(endpoint: impl Into<String>, timeout: Duration) -> Self {
        Self::new(endpoint, timeout, std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()))
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        let body = RequestBody { model: &request.model, messages: &request.messages, temperature: request.temperature, n: 1 };
        let mut req = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(classify)?;
        let parsed: ResponseBody = resp
            .body_mut()
            .read_json()
            .map_err(|e| BackendError::Permanent(format!("unexpected response body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| BackendError::Permanent("response has no choices".into()))
    }
}

fn classify(e: ureq::Error) -> BackendError {
    match e {
        ureq::Error::StatusCode(code) if code == 429 || code >= 500 => BackendError::Retryable(format!("HTTP {code}")),
        ureq::Error::StatusCode(code) => BackendError::Permanent(format!("HTTP {code}")),
        ureq::Error::BadUri(m) => BackendError::Permanent(format!("bad endpoint URI: {m}")),
        other => BackendError::Retryable(other.to_string()),
    }
}
