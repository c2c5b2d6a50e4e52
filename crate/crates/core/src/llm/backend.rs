use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::{PromptBundle, Purpose, EMPTY_RESULT_MARKER};

static NETWORK_REQUESTS: AtomicUsize = AtomicUsize::new(0);

/// Number of outbound HTTP requests made by [`LiveBackend`] in this process.
pub fn network_requests() -> usize {
    NETWORK_REQUESTS.load(Ordering::SeqCst)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("chat backend request failed: {0}")]
    Transport(String),
    #[error("chat backend returned an unusable reply: {0}")]
    BadReply(String),
    #[error("scripted backend has no response for this {purpose} request")]
    Unscripted { purpose: Purpose },
    #[error("{0}")]
    Scripted(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

/// A chat-completion service. Implementations must allow concurrent calls.
pub trait ChatBackend: Send + Sync {
    fn name(&self) -> &str;

    fn complete(&self, prompt: &PromptBundle, temperature: f64) -> Result<String, BackendError>;

    fn reachable(&self) -> bool {
        true
    }
}

/// What a scripted rule answers with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reply {
    Text(String),
    /// Fails the request with this message.
    Fail(String),
    /// Grounded verbalization: repeats the prompt's `rows` slot, or
    /// "I don't know." when the rows are empty.
    EchoRows,
}

/// First matching rule wins. Unset fields match anything.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptRule {
    #[serde(default)]
    pub purpose: Option<Purpose>,
    /// Slot compared with `equals` (default `question`).
    #[serde(default)]
    pub slot: Option<String>,
    #[serde(default)]
    pub equals: Option<String>,
    /// Substring of the rendered user prompt.
    #[serde(default)]
    pub contains: Option<String>,
    pub reply: Reply,
}

impl Default for Reply {
    fn default() -> Self {
        Reply::Fail("empty rule".into())
    }
}

impl ScriptRule {
    pub fn new(purpose: Purpose, reply: Reply) -> Self {
        Self {
            purpose: Some(purpose),
            reply,
            ..Default::default()
        }
    }

    pub fn when_question(mut self, question: impl Into<String>) -> Self {
        self.slot = Some("question".into());
        self.equals = Some(question.into());
        self
    }

    pub fn when_slot(mut self, slot: impl Into<String>, value: impl Into<String>) -> Self {
        self.slot = Some(slot.into());
        self.equals = Some(value.into());
        self
    }

    pub fn when_contains(mut self, text: impl Into<String>) -> Self {
        self.contains = Some(text.into());
        self
    }

    fn matches(&self, p: &PromptBundle) -> bool {
        if self.purpose.is_some_and(|x| x != p.purpose) {
            return false;
        }
        if let Some(v) = &self.equals {
            let slot = self.slot.as_deref().unwrap_or("question");
            if p.filled_slots.get(slot) != Some(v) {
                return false;
            }
        }
        if let Some(c) = &self.contains {
            if !p.user.contains(c.as_str()) {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct ScriptFile {
    #[serde(default)]
    name: Option<String>,
    rules: Vec<ScriptRule>,
}

/// Deterministic backend answering from an ordered rule list.
/// Never touches the network.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    name: String,
    rules: Vec<ScriptRule>,
    calls: Mutex<Vec<Purpose>>,
}

impl Clone for ScriptedBackend {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            rules: self.rules.clone(),
            calls: Mutex::new(Vec::new()),
        }
    }
}

impl ScriptedBackend {
    pub fn new(rules: Vec<ScriptRule>) -> Self {
        Self {
            name: "scripted".into(),
            rules,
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn push(&mut self, rule: ScriptRule) {
        self.rules.push(rule);
    }

    pub fn rules(&self) -> &[ScriptRule] {
        &self.rules
    }

    /// Loads `{"name": ..., "rules": [...]}`.
    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        let file: ScriptFile =
            serde_json::from_str(text).map_err(|e| BackendError::Config(format!("script: {e}")))?;
        let mut b = Self::new(file.rules);
        if let Some(n) = file.name {
            b.name = n;
        }
        Ok(b)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScriptFile {
            name: Some(self.name.clone()),
            rules: self.rules.clone(),
        })
        .expect("script serializes")
    }

    /// Purposes of all requests served so far, in order.
    pub fn calls(&self) -> Vec<Purpose> {
        self.calls.lock().unwrap().clone()
    }
}

/// Rows slot as a one-line answer.
fn echo_rows(rows: &str) -> String {
    let rows = rows.trim();
    if rows.is_empty() || rows == EMPTY_RESULT_MARKER {
        return "I don't know.".into();
    }
    let body: Vec<&str> = rows
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .collect();
    if body.is_empty() {
        return "I don't know.".into();
    }
    format!("According to the knowledge graph: {}.", body.join("; "))
}

impl ChatBackend for ScriptedBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn complete(&self, prompt: &PromptBundle, _temperature: f64) -> Result<String, BackendError> {
        self.calls.lock().unwrap().push(prompt.purpose);
        let rule =
            self.rules
                .iter()
                .find(|r| r.matches(prompt))
                .ok_or(BackendError::Unscripted {
                    purpose: prompt.purpose,
                })?;
        match &rule.reply {
            Reply::Text(t) => Ok(t.clone()),
            Reply::Fail(m) => Err(BackendError::Scripted(m.clone())),
            Reply::EchoRows => Ok(echo_rows(
                prompt
                    .filled_slots
                    .get("rows")
                    .map(String::as_str)
                    .unwrap_or(""),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveConfig {
    /// Chat-completions URL, e.g. `https://host/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Extra attempts after a failed request (0 or 1).
    #[serde(default)]
    pub retries: u32,
}

fn default_timeout() -> u64 {
    60
}

/// Backend speaking the common chat-completions HTTP contract.
pub struct LiveBackend {
    config: LiveConfig,
    api_key: String,
    agent: ureq::Agent,
}

impl LiveBackend {
    /// Reads the API key from the configured environment variable.
    pub fn new(config: LiveConfig) -> Result<Self, BackendError> {
        let api_key = std::env::var(&config.api_key_env).map_err(|_| {
            BackendError::Config(format!(
                "environment variable {} is not set",
                config.api_key_env
            ))
        })?;
        if config.retries > 1 {
            return Err(BackendError::Config(
                "at most one retry is supported".into(),
            ));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        Ok(Self {
            config,
            api_key,
            agent,
        })
    }

    fn request(&self, prompt: &PromptBundle, temperature: f64) -> Result<String, BackendError> {
        let body = json!({
            "model": self.config.model,
            "temperature": temperature,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
        });
        NETWORK_REQUESTS.fetch_add(1, Ordering::SeqCst);
        let mut resp = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let value: serde_json::Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| BackendError::BadReply(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| BackendError::BadReply("missing choices[0].message.content".into()))
    }
}

impl ChatBackend for LiveBackend {
    fn name(&self) -> &str {
        &self.config.model
    }

    fn complete(&self, prompt: &PromptBundle, temperature: f64) -> Result<String, BackendError> {
        let mut result = self.request(prompt, temperature);
        for _ in 0..self.config.retries {
            if matches!(result, Err(BackendError::Transport(_))) {
                result = self.request(prompt, temperature);
            }
        }
        result
    }
}
