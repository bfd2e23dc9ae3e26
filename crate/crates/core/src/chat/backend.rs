//! Language-model backends: the request shapes, a retrying `complete`, an
//! HTTP client, and a deterministic offline stub.

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::prompt::{ChatMessage, DEFAULT_SYSTEM_PROMPT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    /// Single flattened prompt embedding the history.
    Completion,
    /// Role-tagged messages with a system prompt.
    Chat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub mode: BackendMode,
    pub endpoint: String,
    pub model_name: String,
    /// Used in chat mode only.
    pub system_prompt: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
    /// First retry delay; doubles on each further retry.
    pub backoff_ms: u64,
    pub max_tokens: u32,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            mode: BackendMode::Chat,
            endpoint: "http://127.0.0.1:8081/v1/complete".to_string(),
            model_name: "gpt-3.5-turbo".to_string(),
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_string(),
            timeout_ms: 20_000,
            max_retries: 2,
            backoff_ms: 250,
            max_tokens: 256,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.timeout_ms == 0 {
            return Err("backend timeout_ms must be positive".into());
        }
        Ok(())
    }
}

/// Wire body sent to a backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LlmRequest {
    Completion { prompt: String, max_tokens: u32 },
    Chat { messages: Vec<ChatMessage> },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("connection failed: {0}")]
    Connection(String),
    #[error("backend answered with status {status}")]
    Status { status: u16, retryable: bool },
    #[error("malformed backend response: {0}")]
    InvalidResponse(String),
}

impl TransportError {
    fn retryable(&self) -> bool {
        match self {
            TransportError::Timeout | TransportError::Connection(_) => true,
            TransportError::Status { retryable, .. } => *retryable,
            TransportError::InvalidResponse(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("backend timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("backend unavailable after {attempts} attempt(s): {last}")]
    Unavailable { attempts: u32, last: String },
    #[error("backend rejected the request: {0}")]
    Rejected(String),
    #[error("backend returned an empty response")]
    EmptyResponse,
}

#[async_trait]
pub trait LlmBackend: Send + Sync {
    /// One attempt; returns the raw response text.
    async fn send(&self, request: &LlmRequest) -> Result<String, TransportError>;
}

/// Send `request`, retrying transport failures up to `max_retries` times with
/// exponential backoff. Each attempt is bounded by `timeout_ms`.
pub async fn complete(
    backend: &dyn LlmBackend,
    config: &BackendConfig,
    request: &LlmRequest,
) -> Result<String, BackendError> {
    let timeout = Duration::from_millis(config.timeout_ms);
    let attempts = config.max_retries + 1;
    let mut last = TransportError::Timeout;
    for attempt in 0..attempts {
        if attempt > 0 {
            let delay = config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
            tokio::time::sleep(Duration::from_millis(delay)).await;
        }
        let outcome = match tokio::time::timeout(timeout, backend.send(request)).await {
            Ok(r) => r,
            Err(_) => Err(TransportError::Timeout),
        };
        match outcome {
            Ok(text) => {
                let text = text.trim();
                if text.is_empty() {
                    return Err(BackendError::EmptyResponse);
                }
                return Ok(text.to_string());
            }
            Err(e) if !e.retryable() => return Err(BackendError::Rejected(e.to_string())),
            Err(e) => {
                tracing::debug!(attempt, "backend attempt failed: {e}");
                last = e;
            }
        }
    }
    Err(match last {
        TransportError::Timeout => BackendError::Timeout { attempts },
        other => BackendError::Unavailable { attempts, last: other.to_string() },
    })
}

/// Replies used by the offline stub.
pub const CANNED_RESPONSES: &[&str] = &[
    "Hello! Nice to meet you.",
    "That sounds wonderful. I am glad to hear it.",
    "Thank you for telling me.",
    "Hmm, let me think about that.",
    "Yes, of course.",
    "I'm not sure, maybe tomorrow.",
    "Wow, that is amazing!",
    "I am sorry to hear that.",
    "Good luck, you can do it!",
    "See you later, take care.",
    "What would you like to talk about?",
    "Wait a moment, please.",
];

/// Deterministic offline backend. Picks a reply by hashing the request, or
/// always returns one fixed reply.
#[derive(Debug, Clone)]
pub struct StubBackend {
    responses: Vec<String>,
}

impl Default for StubBackend {
    fn default() -> Self {
        Self { responses: CANNED_RESPONSES.iter().map(|s| s.to_string()).collect() }
    }
}

impl StubBackend {
    pub fn fixed(reply: impl Into<String>) -> Self {
        Self { responses: vec![reply.into()] }
    }

    pub fn with_responses(responses: Vec<String>) -> Self {
        assert!(!responses.is_empty(), "stub needs at least one response");
        Self { responses }
    }

    pub fn canned(&self, request: &LlmRequest) -> &str {
        let body = serde_json::to_vec(request).expect("request serializes");
        let digest = Sha256::digest(&body);
        let key = u64::from_be_bytes(digest[..8].try_into().expect("8 bytes"));
        &self.responses[(key % self.responses.len() as u64) as usize]
    }
}

#[async_trait]
impl LlmBackend for StubBackend {
    async fn send(&self, request: &LlmRequest) -> Result<String, TransportError> {
        Ok(self.canned(request).to_string())
    }
}

/// POSTs the request body as JSON and reads `{"text": ...}` back.
pub struct HttpBackend {
    client: reqwest::Client,
    endpoint: String,
    model_name: String,
    api_key: Option<String>,
}

#[derive(Deserialize)]
struct TextResponse {
    text: String,
}

impl HttpBackend {
    pub fn new(config: &BackendConfig, api_key: Option<String>) -> Self {
        Self {
            client: reqwest::Client::new(),
            endpoint: config.endpoint.clone(),
            model_name: config.model_name.clone(),
            api_key,
        }
    }
}

#[async_trait]
impl LlmBackend for HttpBackend {
    async fn send(&self, request: &LlmRequest) -> Result<String, TransportError> {
        let mut builder = self
            .client
            .post(&self.endpoint)
            .header("x-model-name", &self.model_name)
            .json(request);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().await.map_err(|e| {
            if e.is_timeout() {
                TransportError::Timeout
            } else {
                TransportError::Connection(e.to_string())
            }
        })?;
        let status = response.status();
        if !status.is_success() {
            let retryable = status.is_server_error() || status.as_u16() == 408 || status.as_u16() == 429;
            return Err(TransportError::Status { status: status.as_u16(), retryable });
        }
        let body: TextResponse = response
            .json()
            .await
            .map_err(|e| TransportError::InvalidResponse(e.to_string()))?;
        Ok(body.text)
    }
}
