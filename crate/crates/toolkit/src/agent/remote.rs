//! HTTP chat-completions backend with retry/backoff, plus the embedding
//! endpoint client used by the semantic study.
//!
//! Credentials and base URL come from `PSYCHOFORGE_API_KEY` and
//! `PSYCHOFORGE_API_BASE`; construction fails without a key, before any
//! network traffic. Transient failures (connection errors, 429, 5xx) retry
//! with exponential backoff up to the spec's `max_retries`.

use std::time::Duration;

use super::{AgentError, AgentSpec, Completion, CompletionBackend};

pub const API_BASE_ENV: &str = "PSYCHOFORGE_API_BASE";
pub const API_KEY_ENV: &str = "PSYCHOFORGE_API_KEY";
const DEFAULT_API_BASE: &str = "https://api.openai.com/v1";

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub base_url: String,
    pub api_key: String,
    /// First backoff delay; doubles per attempt. Small in tests.
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
    pub request_timeout: Duration,
}

impl RemoteConfig {
    /// Reads the environment; errors (with no network call) when the key is
    /// absent.
    pub fn from_env() -> Result<Self, AgentError> {
        let api_key = std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or(AgentError::MissingCredentials)?;
        let base_url =
            std::env::var(API_BASE_ENV).unwrap_or_else(|_| DEFAULT_API_BASE.to_string());
        Ok(RemoteConfig {
            base_url,
            api_key,
            base_delay_ms: 500,
            max_delay_ms: 16_000,
            request_timeout: Duration::from_secs(120),
        })
    }
}

pub struct RemoteBackend {
    config: RemoteConfig,
    client: reqwest::blocking::Client,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Result<Self, AgentError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| AgentError::Http { message: e.to_string() })?;
        Ok(RemoteBackend { config, client })
    }

    pub fn from_env() -> Result<Self, AgentError> {
        RemoteBackend::new(RemoteConfig::from_env()?)
    }

    fn backoff(&self, attempt: usize) -> Duration {
        let ms = self
            .config
            .base_delay_ms
            .saturating_mul(1u64 << attempt.min(16))
            .min(self.config.max_delay_ms);
        Duration::from_millis(ms)
    }

    fn post_json(
        &self,
        path: &str,
        body: &serde_json::Value,
        max_retries: usize,
    ) -> Result<(serde_json::Value, usize), AgentError> {
        let url = format!("{}/{}", self.config.base_url.trim_end_matches('/'), path);
        let mut last_error = String::new();
        for attempt in 0..=max_retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff(attempt - 1));
            }
            let sent = self
                .client
                .post(&url)
                .bearer_auth(&self.config.api_key)
                .json(body)
                .send();
            match sent {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        let value: serde_json::Value = response
                            .json()
                            .map_err(|e| AgentError::Http { message: e.to_string() })?;
                        return Ok((value, attempt + 1));
                    }
                    let retryable = status.as_u16() == 429 || status.is_server_error();
                    let body = response.text().unwrap_or_default();
                    last_error = format!("{status}: {}", truncate(&body, 200));
                    if !retryable {
                        return Err(AgentError::Http { message: last_error });
                    }
                    log::warn!("{url} returned {status}; retrying (attempt {})", attempt + 1);
                }
                Err(e) => {
                    last_error = e.to_string();
                    log::warn!("{url} failed: {last_error}; retrying (attempt {})", attempt + 1);
                }
            }
        }
        Err(AgentError::RetriesExhausted { attempts: max_retries + 1, last_error })
    }

    /// Embeds a batch of texts, preserving input order.
    pub fn embed(
        &self,
        model: &str,
        texts: &[String],
        max_retries: usize,
    ) -> Result<Vec<Vec<f64>>, AgentError> {
        let body = serde_json::json!({ "model": model, "input": texts });
        let (value, _) = self.post_json("embeddings", &body, max_retries)?;
        let data = value
            .get("data")
            .and_then(|d| d.as_array())
            .ok_or_else(|| AgentError::MalformedResponse { what: "embeddings.data".into() })?;
        if data.len() != texts.len() {
            return Err(AgentError::MalformedResponse {
                what: format!("embeddings.data length {} != {}", data.len(), texts.len()),
            });
        }
        let mut out = Vec::with_capacity(data.len());
        for entry in data {
            let vector = entry
                .get("embedding")
                .and_then(|e| e.as_array())
                .ok_or_else(|| AgentError::MalformedResponse { what: "embedding".into() })?
                .iter()
                .map(|v| v.as_f64().unwrap_or(f64::NAN))
                .collect::<Vec<f64>>();
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(AgentError::MalformedResponse { what: "non-finite embedding".into() });
            }
            out.push(vector);
        }
        Ok(out)
    }
}

impl CompletionBackend for RemoteBackend {
    fn complete(&self, spec: &AgentSpec) -> Result<Completion, AgentError> {
        let body = serde_json::json!({
            "model": spec.model_name,
            "temperature": spec.temperature,
            "messages": [{ "role": "user", "content": spec.prompt }],
        });
        let (value, calls) = self.post_json("chat/completions", &body, spec.max_retries)?;
        let text = value
            .get("choices")
            .and_then(|c| c.get(0))
            .and_then(|c| c.get("message"))
            .and_then(|m| m.get("content"))
            .and_then(|t| t.as_str())
            .ok_or_else(|| AgentError::MalformedResponse {
                what: "choices[0].message.content".into(),
            })?
            .to_string();
        Ok(Completion { text, calls })
    }

    fn name(&self) -> &'static str {
        "remote"
    }
}

fn truncate(s: &str, limit: usize) -> &str {
    let mut end = s.len().min(limit);
    while !s.is_char_boundary(end) {
        end -= 1;
    }
    &s[..end]
}
