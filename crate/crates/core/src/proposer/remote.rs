//! Chat-completions HTTP client used when a real model endpoint is available.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use tracing::{debug, warn};

use super::{check_temperature, Proposer, ProposerError, ProposerRequest, ProposerResponse, Provider};

pub const ENV_ENDPOINT: &str = "CARPOOL_LLM_ENDPOINT";
pub const ENV_MODEL: &str = "CARPOOL_LLM_MODEL";
pub const ENV_API_KEY: &str = "CARPOOL_LLM_API_KEY";

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    /// Full URL of the chat-completions route.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
    pub timeout: Duration,
    pub max_in_flight: usize,
    /// Log message lengths instead of message content.
    pub redact: bool,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            max_retries: 3,
            initial_backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(8),
            timeout: Duration::from_secs(120),
            max_in_flight: 4,
            redact: true,
        }
    }

    /// Reads endpoint, model and token from `CARPOOL_LLM_ENDPOINT`,
    /// `CARPOOL_LLM_MODEL` and `CARPOOL_LLM_API_KEY`.
    pub fn from_env() -> Result<Self, ProposerError> {
        let endpoint = std::env::var(ENV_ENDPOINT)
            .map_err(|_| ProposerError::Config(format!("{ENV_ENDPOINT} is not set")))?;
        let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| "llama-3.1-8b-instruct".to_string());
        let mut cfg = Self::new(endpoint, model);
        cfg.api_key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        Ok(cfg)
    }

    fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u32.checked_shl(retry).unwrap_or(u32::MAX);
        self.initial_backoff.saturating_mul(factor).min(self.max_backoff)
    }
}

/// Counting semaphore bounding concurrent requests.
struct InFlight {
    count: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn acquire(&self) -> Permit<'_> {
        let mut count = self.count.lock().expect("in-flight lock poisoned");
        while *count >= self.limit {
            count = self.freed.wait(count).expect("in-flight lock poisoned");
        }
        *count += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.count.lock().expect("in-flight lock poisoned") -= 1;
        self.0.freed.notify_one();
    }
}

pub struct RemoteProposer {
    cfg: RemoteConfig,
    client: reqwest::blocking::Client,
    in_flight: InFlight,
}

fn retryable(status: u16) -> bool {
    matches!(status, 408 | 429 | 500 | 502 | 503 | 504)
}

/// `choices[0].message.content`, naming the first missing step on failure.
fn extract_text(body: &str) -> Result<String, ProposerError> {
    let value: Value = serde_json::from_str(body).map_err(|e| ProposerError::Decode {
        missing: format!("JSON body ({e})"),
    })?;
    let missing = |path: &str| ProposerError::Decode { missing: path.to_string() };
    let choices = value.get("choices").ok_or_else(|| missing("choices"))?;
    let first = choices.get(0).ok_or_else(|| missing("choices[0]"))?;
    let message = first.get("message").ok_or_else(|| missing("choices[0].message"))?;
    let content = message
        .get("content")
        .and_then(Value::as_str)
        .ok_or_else(|| missing("choices[0].message.content"))?;
    if content.trim().is_empty() {
        return Err(ProposerError::EmptyText);
    }
    Ok(content.to_string())
}

impl RemoteProposer {
    pub fn new(cfg: RemoteConfig) -> Result<Self, ProposerError> {
        if cfg.endpoint.is_empty() {
            return Err(ProposerError::Config("empty endpoint".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| ProposerError::Config(e.to_string()))?;
        let limit = cfg.max_in_flight.max(1);
        Ok(Self {
            cfg,
            client,
            in_flight: InFlight {
                count: Mutex::new(0),
                freed: Condvar::new(),
                limit,
            },
        })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.cfg
    }

    fn request_body(&self, prompt: &str, temperature: f64) -> Value {
        json!({
            "model": self.cfg.model,
            "messages": [{ "role": "user", "content": prompt }],
            "temperature": temperature,
        })
    }
}

impl Proposer for RemoteProposer {
    fn provider(&self) -> Provider {
        Provider::Remote
    }

    fn propose(&self, req: &ProposerRequest<'_>) -> Result<ProposerResponse, ProposerError> {
        check_temperature(req.temperature)?;
        let body = self.request_body(&req.prompt.full_text, req.temperature);
        if self.cfg.redact {
            debug!(round = req.round_index, temperature = req.temperature, prompt_chars = req.prompt.full_text.len(), "remote request");
        } else {
            debug!(round = req.round_index, %body, "remote request");
        }

        let _permit = self.in_flight.acquire();
        let start = Instant::now();
        let mut retries = 0u32;
        loop {
            let mut call = self.client.post(&self.cfg.endpoint).json(&body);
            if let Some(key) = &self.cfg.api_key {
                call = call.bearer_auth(key);
            }
            let outcome = call.send();
            let wait = match outcome {
                Ok(resp) => {
                    let status = resp.status().as_u16();
                    let retry_after = resp
                        .headers()
                        .get("retry-after")
                        .and_then(|v| v.to_str().ok())
                        .and_then(|v| v.trim().parse::<u64>().ok())
                        .map(Duration::from_secs);
                    let text = resp.text().map_err(|e| ProposerError::Transport {
                        message: e.to_string(),
                        retries,
                    })?;
                    if (200..300).contains(&status) {
                        let content = extract_text(&text)?;
                        if self.cfg.redact {
                            debug!(status, chars = content.len(), retries, "remote response");
                        } else {
                            debug!(status, %content, retries, "remote response");
                        }
                        return Ok(ProposerResponse {
                            text: content,
                            latency: start.elapsed(),
                            provider: Provider::Remote,
                            retries,
                        });
                    }
                    if !retryable(status) || retries >= self.cfg.max_retries {
                        return Err(ProposerError::Status { status, body: text, retries });
                    }
                    warn!(status, retries, "retrying remote proposer");
                    retry_after
                        .unwrap_or_else(|| self.cfg.backoff(retries))
                        .min(self.cfg.max_backoff)
                }
                Err(e) => {
                    let transient = e.is_timeout() || e.is_connect() || e.is_request();
                    if !transient || retries >= self.cfg.max_retries {
                        return Err(ProposerError::Transport {
                            message: e.to_string(),
                            retries,
                        });
                    }
                    warn!(error = %e, retries, "retrying remote proposer");
                    self.cfg.backoff(retries)
                }
            };
            std::thread::sleep(wait);
            retries += 1;
        }
    }
}
