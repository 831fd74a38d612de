//! Blocking client for OpenAI-compatible chat-completions endpoints.

use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use synworld_core::llm::{ChatBackend, ChatRequest, LlmError, Role};

pub const API_KEY_ENV: &str = "SYNWORLD_API_KEY";

const BODY_EXCERPT_CHARS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpSettings {
    /// Full chat-completions URL, e.g. `https://api.openai.com/v1/chat/completions`.
    pub endpoint: String,
    /// Overrides the model named in each request when set.
    pub model: Option<String>,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub jitter_seed: u64,
}

impl Default for HttpSettings {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: None,
            api_key_env: API_KEY_ENV.into(),
            timeout_secs: 120,
            max_retries: 3,
            backoff_base_ms: 500,
            jitter_seed: 0,
        }
    }
}

/// One HTTP attempt, as recorded in the backend's attempt log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attempt {
    pub attempt: u32,
    pub status: Option<u16>,
    pub success: bool,
}

pub struct HttpBackend {
    settings: HttpSettings,
    api_key: Option<String>,
    agent: ureq::Agent,
    jitter: Mutex<ChaCha8Rng>,
    attempts: Mutex<Vec<Attempt>>,
}

fn retryable(status: u16) -> bool {
    status == 408 || status == 429 || status >= 500
}

fn excerpt(body: &str) -> String {
    body.chars().take(BODY_EXCERPT_CHARS).collect()
}

fn role_name(role: Role) -> &'static str {
    match role {
        Role::System => "system",
        Role::User => "user",
        Role::Assistant => "assistant",
    }
}

impl HttpBackend {
    /// Reads the API key from the configured environment variable, if set.
    pub fn from_env(settings: HttpSettings) -> Self {
        let key = std::env::var(&settings.api_key_env).ok().filter(|k| !k.is_empty());
        Self::new(settings, key)
    }

    pub fn new(settings: HttpSettings, api_key: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(settings.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let jitter = Mutex::new(ChaCha8Rng::seed_from_u64(settings.jitter_seed));
        Self { settings, api_key, agent, jitter, attempts: Mutex::new(Vec::new()) }
    }

    pub fn attempts(&self) -> Vec<Attempt> {
        self.attempts.lock().expect("attempt log poisoned").clone()
    }

    fn backoff(&self, retry: u32) -> Duration {
        let base = self.settings.backoff_base_ms.saturating_mul(1 << retry.min(16)) as f64;
        let factor = 1.0 + self.jitter.lock().expect("jitter rng poisoned").gen_range(0.0..0.5);
        Duration::from_millis((base * factor) as u64)
    }

    fn body(&self, request: &ChatRequest) -> Value {
        let messages: Vec<Value> = request
            .messages
            .iter()
            .map(|m| json!({ "role": role_name(m.role), "content": m.content }))
            .collect();
        json!({
            "model": self.settings.model.as_deref().unwrap_or(&request.model),
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        })
    }

    /// One POST; `Ok` carries the status and body text.
    fn send(&self, body: &Value) -> Result<(u16, String), String> {
        let mut req = self.agent.post(&self.settings.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok((status, text))
    }

    fn record(&self, attempt: u32, status: Option<u16>, success: bool) {
        self.attempts.lock().expect("attempt log poisoned").push(Attempt { attempt, status, success });
    }
}

fn first_choice(text: &str) -> Result<String, LlmError> {
    let value: Value = serde_json::from_str(text).map_err(|e| LlmError::Transport {
        status: Some(200),
        body: format!("unparseable response ({e}): {}", excerpt(text)),
    })?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| LlmError::Transport {
            status: Some(200),
            body: format!("response has no choices[0].message.content: {}", excerpt(text)),
        })
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        request.validate()?;
        let body = self.body(request);
        let mut attempt = 0;
        loop {
            let (status, error) = match self.send(&body) {
                Ok((status @ 200..=299, text)) => {
                    self.record(attempt, Some(status), true);
                    return first_choice(&text);
                }
                Ok((status, text)) => {
                    self.record(attempt, Some(status), false);
                    if !retryable(status) {
                        return Err(LlmError::Transport { status: Some(status), body: excerpt(&text) });
                    }
                    (Some(status), excerpt(&text))
                }
                Err(e) => {
                    self.record(attempt, None, false);
                    (None, e)
                }
            };
            if attempt >= self.settings.max_retries {
                return Err(LlmError::Transport {
                    status,
                    body: format!("gave up after {} attempts: {error}", attempt + 1),
                });
            }
            let wait = self.backoff(attempt);
            log::warn!(
                "chat request failed (status {status:?}), retry {} of {} in {wait:?}",
                attempt + 1,
                self.settings.max_retries
            );
            thread::sleep(wait);
            attempt += 1;
        }
    }
}
