//! Chat-completion client with a scripted mock backend, plus extraction of
//! the Turtle payload from replies.

mod extract;

use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::prompt::{Prompt, Technique};

pub use extract::{extract_ontology, extract_ontology_text, extraction_prefixes, ExtractError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Mock,
    #[default]
    Http,
}

fn default_concurrency() -> usize {
    4
}
fn default_retries() -> u32 {
    3
}
fn default_timeout() -> u64 {
    120
}
fn default_retry_base() -> u64 {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub backend: Backend,
    /// Directory of scripted replies for the mock backend.
    #[serde(default)]
    pub mock_replies: Option<PathBuf>,
    #[serde(default)]
    pub endpoint_url: String,
    #[serde(alias = "model_name")]
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default)]
    pub frequency_penalty: f64,
    #[serde(default)]
    pub presence_penalty: f64,
    /// Leave sampling parameters out of the request, for models that
    /// reject them.
    #[serde(default)]
    pub omit_sampling_params: bool,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_retry_base")]
    pub retry_base_ms: u64,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl ModelConfig {
    /// Mock backend reading replies from `replies`.
    pub fn mock(replies: impl Into<PathBuf>) -> ModelConfig {
        ModelConfig {
            backend: Backend::Mock,
            mock_replies: Some(replies.into()),
            endpoint_url: String::new(),
            model: "mock".into(),
            temperature: 0.0,
            frequency_penalty: 0.0,
            presence_penalty: 0.0,
            omit_sampling_params: false,
            max_retries: default_retries(),
            timeout_secs: default_timeout(),
            concurrency: default_concurrency(),
            api_key_env: None,
            retry_base_ms: default_retry_base(),
        }
    }

    pub fn from_toml(text: &str) -> Result<ModelConfig, ConfigError> {
        let cfg: ModelConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::new(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML config. A relative `mock_replies` path is resolved
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<ModelConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = ModelConfig::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })?;
        if let Some(dir) = &cfg.mock_replies {
            if dir.is_relative() {
                cfg.mock_replies = Some(path.parent().unwrap_or(Path::new(".")).join(dir));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.model.trim().is_empty() {
            return invalid("model must not be empty");
        }
        if self.concurrency == 0 {
            return invalid("concurrency must be at least 1");
        }
        if ![self.temperature, self.frequency_penalty, self.presence_penalty]
            .iter()
            .all(|v| v.is_finite())
        {
            return invalid("sampling parameters must be finite numbers");
        }
        match self.backend {
            Backend::Mock if self.mock_replies.is_none() => invalid("mock backend needs mock_replies"),
            Backend::Http if self.endpoint_url.trim().is_empty() => invalid("http backend needs endpoint_url"),
            _ => Ok(()),
        }
    }

    /// Chat-completions request body for `prompt`.
    pub fn request_body(&self, prompt: &Prompt) -> Value {
        let mut body = json!({
            "model": self.model,
            "messages": [{ "role": "user", "content": prompt.text }],
        });
        if !self.omit_sampling_params {
            body["temperature"] = json!(self.temperature);
            body["frequency_penalty"] = json!(self.frequency_penalty);
            body["presence_penalty"] = json!(self.presence_penalty);
        }
        body
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

/// The HTTP layer, swappable for tests.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, headers: &[(String, String)], body: &Value) -> Result<HttpReply, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        UreqTransport { agent }
    }
}

impl Transport for UreqTransport {
    fn post_json(&self, url: &str, headers: &[(String, String)], body: &Value) -> Result<HttpReply, String> {
        let mut req = self.agent.post(url);
        for (k, v) in headers {
            req = req.header(k.as_str(), v.as_str());
        }
        let mut resp = req.send(body.to_string()).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok(HttpReply { status, body })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("transport failed after {attempts} attempt(s): {last}")]
    Transport { attempts: u32, last: String },
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("API key variable `{0}` is not set")]
    MissingApiKey(String),
    #[error("endpoint answered HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed completion response: {0}")]
    BadResponse(String),
    #[error("no scripted reply for {technique}/{cq_id} in {dir}")]
    MockReplyMissing {
        technique: Technique,
        cq_id: String,
        dir: PathBuf,
    },
}

impl GatewayError {
    pub fn is_auth(&self) -> bool {
        matches!(self, GatewayError::Auth { .. } | GatewayError::MissingApiKey(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawResponse {
    pub text: String,
    pub prompt_chars: usize,
    pub latency_secs: f64,
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub attempt: u32,
    pub status: Option<u16>,
    pub error: Option<String>,
}

/// Request and response of one `complete` call, without timing data so
/// that mock runs serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub cq_id: String,
    pub technique: Technique,
    pub model: String,
    pub sections: Vec<String>,
    pub request: Value,
    pub attempts: Vec<AttemptRecord>,
    pub response: Option<String>,
    pub error: Option<String>,
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Sends prompts to the configured backend. Safe to share across threads;
/// at most `concurrency` requests are in flight at once.
pub struct Gateway {
    cfg: ModelConfig,
    transport: Box<dyn Transport>,
    api_key: Option<String>,
    permits: Semaphore,
}

impl Gateway {
    /// Builds a gateway over HTTP(S). Fails if the configured API key
    /// variable is unset.
    pub fn new(cfg: ModelConfig) -> Result<Gateway, GatewayError> {
        let transport = UreqTransport::new(Duration::from_secs(cfg.timeout_secs));
        Gateway::with_transport(cfg, Box::new(transport))
    }

    pub fn with_transport(cfg: ModelConfig, transport: Box<dyn Transport>) -> Result<Gateway, GatewayError> {
        let api_key = match (&cfg.backend, &cfg.api_key_env) {
            (Backend::Http, Some(var)) => {
                Some(std::env::var(var).map_err(|_| GatewayError::MissingApiKey(var.clone()))?)
            }
            _ => None,
        };
        let permits = Semaphore::new(cfg.concurrency.max(1));
        Ok(Gateway {
            cfg,
            transport,
            api_key,
            permits,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    /// Sends `prompt` and returns the first successful reply. Transport
    /// errors and HTTP 429/5xx are retried with exponential backoff; 401
    /// and 403 fail at once.
    pub fn complete(&self, prompt: &Prompt) -> (Result<RawResponse, GatewayError>, Transcript) {
        let _permit = self.permits.acquire();
        let request = self.cfg.request_body(prompt);
        let mut transcript = Transcript {
            cq_id: prompt.cq_id.clone(),
            technique: prompt.technique,
            model: self.cfg.model.clone(),
            sections: prompt.sections.clone(),
            request: request.clone(),
            attempts: Vec::new(),
            response: None,
            error: None,
        };
        let start = Instant::now();
        let result = match self.cfg.backend {
            Backend::Mock => self.mock_reply(prompt).map(|text| (text, 1)),
            Backend::Http => self.http_reply(&request, &mut transcript.attempts),
        };
        let result = result.map(|(text, attempt)| RawResponse {
            text,
            prompt_chars: prompt.char_length,
            latency_secs: start.elapsed().as_secs_f64(),
            attempt,
        });
        match &result {
            Ok(r) => transcript.response = Some(r.text.clone()),
            Err(e) => transcript.error = Some(e.to_string()),
        }
        (result, transcript)
    }

    fn mock_reply(&self, prompt: &Prompt) -> Result<String, GatewayError> {
        let dir = self.cfg.mock_replies.clone().unwrap_or_default();
        let file = format!("{}.txt", prompt.cq_id);
        [dir.join(prompt.technique.as_str()).join(&file), dir.join(&file)]
            .iter()
            .find_map(|p| std::fs::read_to_string(p).ok())
            .ok_or(GatewayError::MockReplyMissing {
                technique: prompt.technique,
                cq_id: prompt.cq_id.clone(),
                dir,
            })
    }

    fn http_reply(&self, request: &Value, log: &mut Vec<AttemptRecord>) -> Result<(String, u32), GatewayError> {
        let mut headers = vec![("Content-Type".to_string(), "application/json".to_string())];
        if let Some(key) = &self.api_key {
            headers.push(("Authorization".into(), format!("Bearer {key}")));
        }
        let attempts = self.cfg.max_retries + 1;
        let mut last = String::new();
        for attempt in 1..=attempts {
            if attempt > 1 {
                let factor = 1u64 << (attempt - 2).min(16);
                std::thread::sleep(Duration::from_millis(self.cfg.retry_base_ms.saturating_mul(factor)));
            }
            match self.transport.post_json(&self.cfg.endpoint_url, &headers, request) {
                Err(e) => {
                    log.push(AttemptRecord {
                        attempt,
                        status: None,
                        error: Some(e.clone()),
                    });
                    last = e;
                }
                Ok(reply) => {
                    log.push(AttemptRecord {
                        attempt,
                        status: Some(reply.status),
                        error: None,
                    });
                    match reply.status {
                        200..=299 => return completion_text(&reply.body).map(|t| (t, attempt)),
                        401 | 403 => return Err(GatewayError::Auth { status: reply.status }),
                        429 | 500..=599 => last = format!("HTTP {}", reply.status),
                        status => {
                            return Err(GatewayError::Http {
                                status,
                                body: reply.body,
                            })
                        }
                    }
                }
            }
        }
        Err(GatewayError::Transport { attempts, last })
    }
}

fn completion_text(body: &str) -> Result<String, GatewayError> {
    let v: Value = serde_json::from_str(body).map_err(|e| GatewayError::BadResponse(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| GatewayError::BadResponse("missing choices[0].message.content".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    fn prompt() -> Prompt {
        Prompt {
            technique: Technique::MemorylessCQbyCQ,
            cq_id: "cq01".into(),
            text: "hello".into(),
            char_length: 5,
            sections: vec![],
        }
    }

    fn http_cfg() -> ModelConfig {
        ModelConfig {
            backend: Backend::Http,
            mock_replies: None,
            endpoint_url: "http://localhost/v1/chat/completions".into(),
            model: "m".into(),
            retry_base_ms: 0,
            ..ModelConfig::mock("")
        }
    }

    struct Scripted {
        statuses: Vec<u16>,
        calls: Arc<AtomicUsize>,
    }

    impl Transport for Scripted {
        fn post_json(&self, _: &str, _: &[(String, String)], _: &Value) -> Result<HttpReply, String> {
            let i = self.calls.fetch_add(1, Ordering::SeqCst);
            let status = *self.statuses.get(i).unwrap_or(&200);
            Ok(HttpReply {
                status,
                body: json!({"choices": [{"message": {"content": "ok"}}]}).to_string(),
            })
        }
    }

    fn gateway(statuses: Vec<u16>) -> (Gateway, Arc<AtomicUsize>) {
        let calls = Arc::new(AtomicUsize::new(0));
        let t = Scripted {
            statuses,
            calls: calls.clone(),
        };
        (Gateway::with_transport(http_cfg(), Box::new(t)).unwrap(), calls)
    }

    #[test]
    fn retries_rate_limits() {
        let (g, calls) = gateway(vec![429, 429, 200]);
        let (r, transcript) = g.complete(&prompt());
        let r = r.unwrap();
        assert_eq!(r.attempt, 3);
        assert_eq!(r.text, "ok");
        assert_eq!(calls.load(Ordering::SeqCst), 3);
        assert_eq!(transcript.attempts.len(), 3);
    }

    #[test]
    fn auth_error_not_retried() {
        let (g, calls) = gateway(vec![401]);
        assert_eq!(g.complete(&prompt()).0, Err(GatewayError::Auth { status: 401 }));
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn retries_exhausted() {
        let (g, calls) = gateway(vec![503; 10]);
        assert!(matches!(g.complete(&prompt()).0, Err(GatewayError::Transport { attempts: 4, .. })));
        assert_eq!(calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn client_errors_not_retried() {
        let (g, calls) = gateway(vec![400]);
        assert!(matches!(g.complete(&prompt()).0, Err(GatewayError::Http { status: 400, .. })));
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn request_body_sampling_params() {
        let mut cfg = http_cfg();
        assert_eq!(cfg.request_body(&prompt())["temperature"], json!(0.0));
        cfg.omit_sampling_params = true;
        let body = cfg.request_body(&prompt());
        assert!(body.get("temperature").is_none());
        assert!(body.get("presence_penalty").is_none());
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg = ModelConfig::from_toml("endpoint_url = \"https://x/v1\"\nmodel = \"gpt-4\"\n").unwrap();
        assert_eq!(cfg.backend, Backend::Http);
        assert_eq!((cfg.temperature, cfg.frequency_penalty, cfg.presence_penalty), (0.0, 0.0, 0.0));
        assert_eq!(cfg.concurrency, 4);
        assert!(ModelConfig::from_toml("model = \"m\"\n").is_err());
        assert!(ModelConfig::from_toml("backend = \"mock\"\nmodel = \"m\"\n").is_err());
        assert!(ModelConfig::from_toml("model = \"m\"\nendpoint_url = \"u\"\nbogus = 1\n").is_err());
    }

    #[test]
    fn missing_api_key_variable() {
        let mut cfg = http_cfg();
        cfg.api_key_env = Some("ONTODRAFT_TEST_KEY_THAT_IS_NOT_SET".into());
        assert!(matches!(
            Gateway::with_transport(cfg, Box::new(UreqTransport::new(Duration::from_secs(1)))),
            Err(GatewayError::MissingApiKey(_))
        ));
    }

    #[test]
    fn mock_reply_lookup() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("memoryless")).unwrap();
        std::fs::write(dir.path().join("cq01.txt"), "generic").unwrap();
        let g = Gateway::new(ModelConfig::mock(dir.path())).unwrap();
        assert_eq!(g.complete(&prompt()).0.unwrap().text, "generic");
        std::fs::write(dir.path().join("memoryless/cq01.txt"), "specific").unwrap();
        assert_eq!(g.complete(&prompt()).0.unwrap().text, "specific");
        let mut other = prompt();
        other.cq_id = "cq09".into();
        assert!(matches!(g.complete(&other).0, Err(GatewayError::MockReplyMissing { .. })));
    }
}
