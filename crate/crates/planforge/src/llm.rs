//! Chat-completions client used by domain repair, problem paraphrasing,
//! and reasoning-trace expansion. Entirely optional: every caller has a
//! deterministic fallback, and a record/replay log makes all tests run
//! offline.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::sha256_hex;

/// Client configuration. Secrets travel only through the environment
/// variable named by `auth_env`, never through config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default)]
    pub auth_env: Option<String>,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

fn default_max_output_tokens() -> u32 {
    65_536
}
fn default_temperature() -> f64 {
    0.7
}
fn default_timeout_secs() -> u64 {
    120
}
fn default_retries() -> u32 {
    2
}
fn default_backoff_ms() -> u64 {
    500
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: "http://localhost:8000/v1/chat/completions".to_string(),
            model: "local".to_string(),
            auth_env: None,
            max_output_tokens: default_max_output_tokens(),
            temperature: default_temperature(),
            timeout_secs: default_timeout_secs(),
            retries: default_retries(),
            backoff_ms: default_backoff_ms(),
        }
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("llm endpoint unavailable: {0}")]
    Unavailable(String),
    #[error("no replay entry for request digest {digest}")]
    ReplayMiss { digest: String },
    #[error("output truncated at the generation budget")]
    BudgetExceeded,
    #[error("malformed response: {0}")]
    Protocol(String),
    #[error("replay log collision on digest {digest}")]
    Collision { digest: String },
    #[error("session log io: {0}")]
    Io(#[from] std::io::Error),
}

/// Canonical request body. Field order is fixed by the struct so the
/// digest of the serialized form is stable across runs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChatRequest {
    pub model: String,
    pub system: String,
    pub user: String,
    pub max_tokens: u32,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("request serializes").as_bytes())
    }
}

/// Anything that can answer a system/user prompt pair.
pub trait ChatClient: Send + Sync {
    fn complete(&self, system: &str, user: &str) -> Result<String, LlmError>;
}

/// One record/replay log entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionEntry {
    pub digest: String,
    pub request: ChatRequest,
    pub response: String,
    pub latency_ms: u64,
    pub timestamp_ms: u64,
}

/// Append-only session log, line-delimited JSON.
pub struct SessionLog {
    file: Mutex<std::fs::File>,
}

impl SessionLog {
    pub fn create(path: &Path) -> Result<Self, LlmError> {
        let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(SessionLog { file: Mutex::new(file) })
    }

    pub fn append(&self, entry: &SessionEntry) -> Result<(), LlmError> {
        let line = serde_json::to_string(entry).expect("entry serializes");
        let mut file = self.file.lock().unwrap();
        writeln!(file, "{}", line)?;
        Ok(())
    }

    /// Loads a log into a digest-keyed response map, rejecting entries
    /// that reuse a digest with a different response.
    pub fn load(path: &Path) -> Result<BTreeMap<String, String>, LlmError> {
        let file = std::fs::File::open(path)?;
        let mut map = BTreeMap::new();
        for line in std::io::BufReader::new(file).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: SessionEntry = serde_json::from_str(&line)
                .map_err(|e| LlmError::Protocol(format!("bad session entry: {}", e)))?;
            if let Some(existing) = map.get(&entry.digest) {
                if existing != &entry.response {
                    return Err(LlmError::Collision { digest: entry.digest });
                }
            }
            map.insert(entry.digest, entry.response);
        }
        Ok(map)
    }
}

/// Serves recorded responses by request digest; unmatched requests fail
/// loudly instead of silently hitting the network.
pub struct ReplayClient {
    config: LlmConfig,
    entries: BTreeMap<String, String>,
}

impl ReplayClient {
    pub fn from_log(config: LlmConfig, path: &Path) -> Result<Self, LlmError> {
        Ok(ReplayClient { config, entries: SessionLog::load(path)? })
    }

    pub fn from_entries(config: LlmConfig, entries: BTreeMap<String, String>) -> Self {
        ReplayClient { config, entries }
    }
}

impl ChatClient for ReplayClient {
    fn complete(&self, system: &str, user: &str) -> Result<String, LlmError> {
        let request = ChatRequest {
            model: self.config.model.clone(),
            system: system.to_string(),
            user: user.to_string(),
            max_tokens: self.config.max_output_tokens,
            temperature: self.config.temperature,
        };
        let digest = request.digest();
        self.entries
            .get(&digest)
            .cloned()
            .ok_or(LlmError::ReplayMiss { digest })
    }
}

/// In-memory scripted client: answers requests from a fixed queue. Used by
/// tests and by offline dry runs.
#[derive(Default)]
pub struct ScriptedClient {
    responses: Mutex<std::collections::VecDeque<String>>,
}

impl ScriptedClient {
    pub fn new(responses: impl IntoIterator<Item = String>) -> Self {
        ScriptedClient { responses: Mutex::new(responses.into_iter().collect()) }
    }
}

impl ChatClient for ScriptedClient {
    fn complete(&self, _system: &str, _user: &str) -> Result<String, LlmError> {
        self.responses
            .lock()
            .unwrap()
            .pop_front()
            .ok_or_else(|| LlmError::Unavailable("scripted responses exhausted".to_string()))
    }
}

#[derive(Debug, Deserialize)]
struct WireChoiceMessage {
    content: Option<String>,
}

#[derive(Debug, Deserialize)]
struct WireChoice {
    message: WireChoiceMessage,
    finish_reason: Option<String>,
}

#[derive(Debug, Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

/// Live HTTP client for chat-completions endpoints, with bounded retries
/// and optional session recording.
pub struct HttpClient {
    config: LlmConfig,
    agent: ureq::Agent,
    record: Option<SessionLog>,
}

impl HttpClient {
    pub fn new(config: LlmConfig) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build();
        HttpClient { config, agent, record: None }
    }

    /// Records every request/response pair to a session log for later
    /// replay.
    pub fn with_recording(mut self, path: &Path) -> Result<Self, LlmError> {
        self.record = Some(SessionLog::create(path)?);
        Ok(self)
    }

    fn token(&self) -> Option<String> {
        self.config.auth_env.as_deref().and_then(|var| std::env::var(var).ok())
    }

    fn send_once(&self, request: &ChatRequest) -> Result<(String, Option<String>), LlmError> {
        let body = serde_json::json!({
            "model": request.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        });
        let mut call = self.agent.post(&self.config.endpoint);
        if let Some(token) = self.token() {
            call = call.set("Authorization", &format!("Bearer {}", token));
        }
        let response = call
            .send_json(body)
            .map_err(|e| match e {
                ureq::Error::Status(code, _) => {
                    LlmError::Unavailable(format!("http status {}", code))
                }
                ureq::Error::Transport(t) => LlmError::Unavailable(t.to_string()),
            })?;
        let wire: WireResponse = response
            .into_json()
            .map_err(|e| LlmError::Protocol(e.to_string()))?;
        let choice = wire
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| LlmError::Protocol("empty choices".to_string()))?;
        let text = choice
            .message
            .content
            .ok_or_else(|| LlmError::Protocol("missing message content".to_string()))?;
        Ok((text, choice.finish_reason))
    }
}

impl ChatClient for HttpClient {
    fn complete(&self, system: &str, user: &str) -> Result<String, LlmError> {
        let request = ChatRequest {
            model: self.config.model.clone(),
            system: system.to_string(),
            user: user.to_string(),
            max_tokens: self.config.max_output_tokens,
            temperature: self.config.temperature,
        };
        let start = Instant::now();
        let mut last_err = LlmError::Unavailable("no attempts made".to_string());
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(
                    self.config.backoff_ms.saturating_mul(attempt as u64),
                ));
            }
            match self.send_once(&request) {
                Ok((text, finish_reason)) => {
                    if let Some(log) = &self.record {
                        log.append(&SessionEntry {
                            digest: request.digest(),
                            request: request.clone(),
                            response: text.clone(),
                            latency_ms: start.elapsed().as_millis() as u64,
                            timestamp_ms: SystemTime::now()
                                .duration_since(UNIX_EPOCH)
                                .map(|d| d.as_millis() as u64)
                                .unwrap_or(0),
                        })?;
                    }
                    if finish_reason.as_deref() == Some("length") {
                        return Err(LlmError::BudgetExceeded);
                    }
                    return Ok(text);
                }
                Err(e @ LlmError::Unavailable(_)) => last_err = e,
                Err(other) => return Err(other),
            }
        }
        Err(last_err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(user: &str) -> ChatRequest {
        ChatRequest {
            model: "m".to_string(),
            system: "sys".to_string(),
            user: user.to_string(),
            max_tokens: 64,
            temperature: 0.7,
        }
    }

    #[test]
    fn digests_are_canonical_and_distinct() {
        assert_eq!(request("a").digest(), request("a").digest());
        assert_ne!(request("a").digest(), request("b").digest());
    }

    #[test]
    fn replay_round_trip_through_log_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("session.jsonl");
        let log = SessionLog::create(&path).unwrap();
        let req = request("hello");
        log.append(&SessionEntry {
            digest: req.digest(),
            request: req.clone(),
            response: "hi there".to_string(),
            latency_ms: 3,
            timestamp_ms: 0,
        })
        .unwrap();

        let config = LlmConfig {
            model: "m".to_string(),
            max_output_tokens: 64,
            temperature: 0.7,
            ..Default::default()
        };
        let client = ReplayClient::from_log(config, &path).unwrap();
        assert_eq!(client.complete("sys", "hello").unwrap(), "hi there");
        match client.complete("sys", "unseen") {
            Err(LlmError::ReplayMiss { .. }) => {}
            other => panic!("expected ReplayMiss, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn replay_log_collision_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("session.jsonl");
        let log = SessionLog::create(&path).unwrap();
        let req = request("x");
        for response in ["one", "two"] {
            log.append(&SessionEntry {
                digest: req.digest(),
                request: req.clone(),
                response: response.to_string(),
                latency_ms: 0,
                timestamp_ms: 0,
            })
            .unwrap();
        }
        assert!(matches!(SessionLog::load(&path), Err(LlmError::Collision { .. })));
    }

    #[test]
    fn scripted_client_pops_in_order() {
        let client = ScriptedClient::new(["first".to_string(), "second".to_string()]);
        assert_eq!(client.complete("s", "u").unwrap(), "first");
        assert_eq!(client.complete("s", "u").unwrap(), "second");
        assert!(matches!(client.complete("s", "u"), Err(LlmError::Unavailable(_))));
    }
}
