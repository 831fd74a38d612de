//! Chat-completion backend abstraction and the scripted test backend.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use regex::Regex;
use serde::{Deserialize, Serialize};
use spin::Mutex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub model: String,
}

impl ChatRequest {
    pub fn new(model: impl Into<String>, messages: Vec<Message>) -> Self {
        Self { messages, temperature: 0.0, max_tokens: 1024, model: model.into() }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.messages.is_empty() {
            return Err(LlmError::InvalidRequest("request has no messages".into()));
        }
        match self.messages.iter().find(|m| m.role != Role::System) {
            Some(m) if m.role != Role::User => {
                return Err(LlmError::InvalidRequest(
                    "first non-system message must be from the user".into(),
                ))
            }
            _ => {}
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(LlmError::InvalidRequest("temperature must be >= 0".into()));
        }
        Ok(())
    }

    /// All message contents joined by blank lines; the text scripted rules match against.
    pub fn rendered(&self) -> String {
        let parts: Vec<&str> = self.messages.iter().map(|m| m.content.as_str()).collect();
        parts.join("\n\n")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport error (status {status:?}): {body}")]
    Transport { status: Option<u16>, body: String },
    #[error("backend configuration error: {0}")]
    Configuration(String),
}

/// Anything that answers a chat request with the first choice's text.
pub trait ChatBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError>;
}

impl<T: ChatBackend + ?Sized> ChatBackend for &T {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for Box<T> {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}

/// Crude token estimate: characters / 4, rounded up.
pub fn count_tokens_estimate(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBudget {
    pub calls: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl TokenBudget {
    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

/// Wraps a backend and accumulates estimated token usage.
pub struct MeteredBackend<B> {
    inner: B,
    budget: Mutex<TokenBudget>,
}

impl<B: ChatBackend> MeteredBackend<B> {
    pub fn new(inner: B) -> Self {
        Self { inner, budget: Mutex::new(TokenBudget::default()) }
    }

    pub fn budget(&self) -> TokenBudget {
        *self.budget.lock()
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: ChatBackend> ChatBackend for MeteredBackend<B> {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let out = self.inner.complete(request)?;
        let mut b = self.budget.lock();
        b.calls += 1;
        b.prompt_tokens += count_tokens_estimate(&request.rendered());
        b.completion_tokens += count_tokens_estimate(&out);
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub enum Matcher {
    Substring(String),
    Regex(Regex),
}

impl Matcher {
    pub fn is_match(&self, prompt: &str) -> bool {
        match self {
            Matcher::Substring(s) => prompt.contains(s.as_str()),
            Matcher::Regex(r) => r.is_match(prompt),
        }
    }
}

/// Serialized form of one scripted rule: exactly one of `contains` / `regex`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contains: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regex: Option<String>,
    pub response: String,
}

/// Serialized rule table for [`ScriptedBackend`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedRules {
    #[serde(default)]
    pub rules: Vec<RuleSpec>,
    #[serde(default)]
    pub default: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub prompt: String,
    pub response: String,
    /// Index of the matching rule, `None` when the default answered.
    pub rule: Option<usize>,
}

/// Deterministic backend: the first rule whose matcher hits the rendered
/// prompt supplies the response.
pub struct ScriptedBackend {
    rules: Vec<(Matcher, String)>,
    default: Option<String>,
    log: Mutex<Vec<CallRecord>>,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self { rules: Vec::new(), default: None, log: Mutex::new(Vec::new()) }
    }

    pub fn from_rules(spec: &ScriptedRules) -> Result<Self, LlmError> {
        let mut backend = Self::new();
        for (i, r) in spec.rules.iter().enumerate() {
            let matcher = match (&r.contains, &r.regex) {
                (Some(s), None) => Matcher::Substring(s.clone()),
                (None, Some(pat)) => Matcher::Regex(Regex::new(pat).map_err(|e| {
                    LlmError::Configuration(alloc::format!("rule {i}: bad regex: {e}"))
                })?),
                _ => {
                    return Err(LlmError::Configuration(alloc::format!(
                        "rule {i}: exactly one of `contains` or `regex` is required"
                    )))
                }
            };
            backend.rules.push((matcher, r.response.clone()));
        }
        backend.default = spec.default.clone();
        Ok(backend)
    }

    pub fn rule(mut self, needle: impl Into<String>, response: impl Into<String>) -> Self {
        self.rules.push((Matcher::Substring(needle.into()), response.into()));
        self
    }

    pub fn regex_rule(mut self, pattern: &str, response: impl Into<String>) -> Result<Self, LlmError> {
        let re = Regex::new(pattern).map_err(|e| LlmError::Configuration(e.to_string()))?;
        self.rules.push((Matcher::Regex(re), response.into()));
        Ok(self)
    }

    pub fn with_default(mut self, response: impl Into<String>) -> Self {
        self.default = Some(response.into());
        self
    }

    pub fn calls(&self) -> Vec<CallRecord> {
        self.log.lock().clone()
    }

    pub fn call_count(&self) -> usize {
        self.log.lock().len()
    }
}

impl Default for ScriptedBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        request.validate()?;
        let prompt = request.rendered();
        let hit = self.rules.iter().position(|(m, _)| m.is_match(&prompt));
        let response = match hit {
            Some(i) => self.rules[i].1.clone(),
            None => self
                .default
                .clone()
                .ok_or_else(|| LlmError::Configuration("no scripted rule matched".into()))?,
        };
        self.log.lock().push(CallRecord { prompt, response: response.clone(), rule: hit });
        Ok(response)
    }
}
