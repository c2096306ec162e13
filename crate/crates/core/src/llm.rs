//! Chat-completion gateway: one trait, three implementations.
//!
//! [`HttpBackend`] speaks the standard chat-completions wire protocol to a
//! remote server; [`ScriptedBackend`] replays canned replies for offline
//! tests and golden-transcript replay; [`with_retry`] wraps any backend with
//! bounded retries on transient failures.
//!
//! All five agent roles (plan, thought, execution, reflection, evaluation)
//! share this one contract — role differences live entirely in the prompts,
//! though the judge and reflection roles may be wired to a different
//! (typically smaller) backend in configuration.

mod http;
mod retry;
mod scripted;

pub use http::{HttpBackend, ENV_KEY, ENV_MODEL, ENV_URL};
pub use retry::{with_retry, RetryPolicy, RetryingBackend};
pub use scripted::{ScriptEntry, ScriptMatch, ScriptedBackend};

use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_wire_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

/// One message in a chat exchange.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatTurn {
    pub role: Role,
    pub content: String,
}

impl ChatTurn {
    pub fn system(content: impl Into<String>) -> Self {
        ChatTurn {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatTurn {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatTurn {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Sampling and length controls sent with every completion request.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_new_tokens: u32,
    pub stop_sequences: Vec<String>,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            temperature: 0.7,
            top_p: 0.9,
            max_new_tokens: 1024,
            stop_sequences: Vec::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("backend {backend}: request failed: {message}")]
    Transport { backend: String, message: String },
    #[error("backend {backend}: server returned status {status}: {message}")]
    Status {
        backend: String,
        status: u16,
        message: String,
    },
    #[error("backend {backend}: malformed response: {message}")]
    MalformedResponse { backend: String, message: String },
    #[error("backend configuration error: {0}")]
    Config(String),
    #[error("scripted backend: could not load script: {0}")]
    ScriptLoad(String),
    #[error("scripted backend: script exhausted after {consumed} replies")]
    ScriptExhausted { consumed: usize },
    #[error(
        "scripted backend: reply {index} expected the last user turn to contain {expected:?}, but it was {got:?}"
    )]
    ScriptMismatch {
        index: usize,
        expected: String,
        got: String,
    },
    #[error("chat turns must be non-empty and end with a user or system turn")]
    InvalidTurns,
}

impl LlmError {
    /// Transient failures worth retrying: transport-level errors (including
    /// timeouts) and 408/429/5xx statuses. Client errors, malformed bodies,
    /// and script misconfigurations are permanent.
    pub fn is_retryable(&self) -> bool {
        match self {
            LlmError::Transport { .. } => true,
            LlmError::Status { status, .. } => *status == 408 || *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// A synchronous chat-completion backend. Implementations must be safe to
/// call from multiple episode workers at once.
pub trait ChatBackend: Send + Sync {
    fn name(&self) -> &str;

    /// Returns one assistant message for the conversation so far.
    fn complete(&self, turns: &[ChatTurn], params: &GenerationParams) -> Result<String, LlmError>;
}

impl<T: ChatBackend + ?Sized> ChatBackend for Arc<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn complete(&self, turns: &[ChatTurn], params: &GenerationParams) -> Result<String, LlmError> {
        (**self).complete(turns, params)
    }
}

/// Shared precondition check: at least one turn, and the model must be
/// asked to speak next (no trailing assistant turn).
pub(crate) fn validate_turns(turns: &[ChatTurn]) -> Result<(), LlmError> {
    match turns.last() {
        Some(last) if last.role != Role::Assistant => Ok(()),
        _ => Err(LlmError::InvalidTurns),
    }
}
