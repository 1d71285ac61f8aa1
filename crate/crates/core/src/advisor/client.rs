use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;
use tracing::{info, warn};

use crate::backoff::RetryPolicy;

use super::context::{ChatMessage, Role};
use super::prompt::{ALTERNATES_HEADER, ECAM_HEADER, EXCERPTS_HEADER, FLIGHT_HEADER, QUERY_HEADER};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("chat backend unavailable after {attempts} attempt(s): {reason}")]
    Unavailable { attempts: u32, reason: String },
    #[error("chat backend rejected the request with status {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("chat backend returned an unusable response: {0}")]
    InvalidResponse(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, BackendError::Unavailable { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatReply {
    pub text: String,
    pub attempts: u32,
}

/// A chat-completion backend. Implementations must be stateless with respect
/// to the conversation; the full message list is sent every time.
#[async_trait]
pub trait ChatClient: Send + Sync {
    fn name(&self) -> &str;

    async fn complete(&self, messages: &[ChatMessage]) -> Result<ChatReply, BackendError>;
}

/// Deterministic offline backend. Replies `MOCK ADVISORY` followed by the
/// prompt sections it saw, and records every request.
#[derive(Debug, Default, Clone)]
pub struct MockChatClient {
    calls: Arc<Mutex<Vec<Vec<ChatMessage>>>>,
}

impl MockChatClient {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every message list received so far, oldest first.
    pub fn calls(&self) -> Vec<Vec<ChatMessage>> {
        self.calls.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn reply_for(messages: &[ChatMessage]) -> String {
        let last_user = messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .unwrap_or("");
        let sections: Vec<&str> = [
            (FLIGHT_HEADER, "FLIGHT DATA"),
            (ECAM_HEADER, "ECAM"),
            (EXCERPTS_HEADER, "MANUAL EXCERPTS"),
            (ALTERNATES_HEADER, "ALTERNATE AIRPORTS"),
            (QUERY_HEADER, "PILOT QUERY"),
        ]
        .iter()
        .filter(|(header, _)| last_user.contains(header))
        .map(|(_, name)| *name)
        .collect();
        let prior = messages.len().saturating_sub(2);
        format!(
            "MOCK ADVISORY\nSections: {}\nPrior turns: {prior}",
            if sections.is_empty() { "none".to_string() } else { sections.join(", ") }
        )
    }
}

#[async_trait]
impl ChatClient for MockChatClient {
    fn name(&self) -> &str {
        "mock"
    }

    async fn complete(&self, messages: &[ChatMessage]) -> Result<ChatReply, BackendError> {
        self.calls
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(messages.to_vec());
        Ok(ChatReply {
            text: Self::reply_for(messages),
            attempts: 1,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteChatConfig {
    pub base_url: String,
    pub model: String,
    #[serde(default)]
    pub api_key: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_timeout_secs() -> u64 {
    60
}

/// Client for chat-completions style endpoints:
/// `POST {"model", "messages"}` → `choices[0].message.content`.
pub struct RemoteChatClient {
    config: RemoteChatConfig,
    http: reqwest::Client,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    content: Option<String>,
}

impl RemoteChatClient {
    pub fn new(config: RemoteChatConfig) -> Result<Self, BackendError> {
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Unavailable { attempts: 0, reason: e.to_string() })?;
        Ok(Self { config, http })
    }

    fn url(&self) -> String {
        let base = self.config.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    async fn attempt(&self, body: &serde_json::Value) -> Result<String, (bool, BackendError)> {
        let mut req = self.http.post(self.url()).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(|e| {
            (true, BackendError::Unavailable { attempts: 0, reason: e.to_string() })
        })?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err((true, BackendError::Unavailable { attempts: 0, reason: format!("status {status}") }));
        }
        if !status.is_success() {
            let body = resp.text().await.unwrap_or_default();
            return Err((false, BackendError::Rejected { status: status.as_u16(), body }));
        }
        let parsed: CompletionResponse = resp
            .json()
            .await
            .map_err(|e| (false, BackendError::InvalidResponse(e.to_string())))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .filter(|t| !t.trim().is_empty())
            .ok_or((false, BackendError::InvalidResponse("no choices[0].message.content".into())))
    }
}

#[async_trait]
impl ChatClient for RemoteChatClient {
    fn name(&self) -> &str {
        &self.config.model
    }

    async fn complete(&self, messages: &[ChatMessage]) -> Result<ChatReply, BackendError> {
        let body = json!({ "model": self.config.model, "messages": messages });
        let policy = self.config.retry;
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body).await {
                Ok(text) => {
                    if attempts > 1 {
                        info!(attempts, "chat request succeeded after retry");
                    }
                    return Ok(ChatReply { text, attempts });
                }
                Err((true, BackendError::Unavailable { reason, .. })) => {
                    if attempts >= policy.max_attempts.max(1) {
                        return Err(BackendError::Unavailable { attempts, reason });
                    }
                    warn!(attempt = attempts, %reason, "chat request failed, retrying");
                    tokio::time::sleep(policy.delay_for(attempts)).await;
                }
                Err((_, err)) => return Err(err),
            }
        }
    }
}
