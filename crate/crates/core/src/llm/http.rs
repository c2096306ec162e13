//! Blocking HTTP client for any chat-completions-compatible endpoint.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{validate_turns, ChatBackend, ChatTurn, GenerationParams, LlmError};

/// Default request timeout. Remote 70B-class deployments can take minutes
/// per completion, so this errs generous.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

/// Environment variables consulted by [`HttpBackend::from_env`].
pub const ENV_URL: &str = "GC_LLM_URL";
pub const ENV_MODEL: &str = "GC_LLM_MODEL";
pub const ENV_KEY: &str = "GC_LLM_KEY";

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    temperature: f64,
    top_p: f64,
    max_tokens: u32,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    stop: Vec<&'a str>,
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireResponseMessage,
}

#[derive(Deserialize)]
struct WireResponseMessage {
    content: String,
}

/// Remote chat-completions backend. Stateless per request, so one instance
/// can serve any number of concurrent episodes.
#[derive(Debug)]
pub struct HttpBackend {
    url: String,
    model: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    name: String,
}

impl HttpBackend {
    pub fn new(
        url: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
    ) -> Result<Self, LlmError> {
        Self::with_timeout(url, model, api_key, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(
        url: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Result<Self, LlmError> {
        let url = url.into();
        let model = model.into();
        if url.is_empty() {
            return Err(LlmError::Config("endpoint URL must be non-empty".into()));
        }
        if model.is_empty() {
            return Err(LlmError::Config("model name must be non-empty".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LlmError::Config(format!("could not build HTTP client: {e}")))?;
        let name = format!("http:{model}");
        Ok(HttpBackend {
            url,
            model,
            api_key,
            client,
            name,
        })
    }

    /// Builds a backend from `GC_LLM_URL`, `GC_LLM_MODEL`, and the optional
    /// `GC_LLM_KEY`.
    pub fn from_env() -> Result<Self, LlmError> {
        let url = std::env::var(ENV_URL)
            .map_err(|_| LlmError::Config(format!("{ENV_URL} is not set")))?;
        let model = std::env::var(ENV_MODEL)
            .map_err(|_| LlmError::Config(format!("{ENV_MODEL} is not set")))?;
        let api_key = std::env::var(ENV_KEY).ok();
        Self::new(url, model, api_key)
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn model(&self) -> &str {
        &self.model
    }
}

impl ChatBackend for HttpBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn complete(&self, turns: &[ChatTurn], params: &GenerationParams) -> Result<String, LlmError> {
        validate_turns(turns)?;
        let body = WireRequest {
            model: &self.model,
            messages: turns
                .iter()
                .map(|t| WireMessage {
                    role: t.role.as_wire_str(),
                    content: &t.content,
                })
                .collect(),
            temperature: params.temperature,
            top_p: params.top_p,
            max_tokens: params.max_new_tokens,
            stop: params.stop_sequences.iter().map(String::as_str).collect(),
        };

        let mut request = self.client.post(&self.url).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| LlmError::Transport {
            backend: self.name.clone(),
            message: e.to_string(),
        })?;

        let status = response.status();
        let text = response.text().map_err(|e| LlmError::Transport {
            backend: self.name.clone(),
            message: e.to_string(),
        })?;
        if !status.is_success() {
            return Err(LlmError::Status {
                backend: self.name.clone(),
                status: status.as_u16(),
                message: snippet(&text),
            });
        }

        let parsed: WireResponse =
            serde_json::from_str(&text).map_err(|e| LlmError::MalformedResponse {
                backend: self.name.clone(),
                message: format!("{e}; body: {}", snippet(&text)),
            })?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| LlmError::MalformedResponse {
                backend: self.name.clone(),
                message: "response had no choices".into(),
            })
    }
}

fn snippet(text: &str) -> String {
    const LIMIT: usize = 200;
    if text.len() <= LIMIT {
        text.to_string()
    } else {
        let mut end = LIMIT;
        while !text.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}…", &text[..end])
    }
}
