//! Chat-completion HTTP client with retrying, a persistent response cache,
//! and an offline mode for fully reproducible runs.
//!
//! The wire format is the common chat-completion JSON shape
//! (`{model, messages} -> {choices: [{message: {content}}]}`). Responses are
//! cached one JSON file per key under the cache directory; the key is a
//! SHA-256 digest over (model, prompt, temperature), so changing any of
//! them never aliases an existing entry. API keys travel only through an
//! environment variable and are never logged or written to disk.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::sync::Semaphore;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("environment variable `{0}` with the API key is not set")]
    MissingApiKey(String),
    #[error("invalid gateway config: {0}")]
    InvalidConfig(String),
    #[error("authentication rejected (status {0}); not retrying")]
    AuthRejected(u16),
    #[error("request failed with status {status}: {excerpt}")]
    Status { status: u16, excerpt: String },
    #[error("malformed completion response: {0}")]
    MalformedResponse(String),
    #[error("request timed out")]
    Timeout,
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("retry budget exhausted after {attempts} attempts: {last}")]
    RetryExhausted { attempts: u32, last: String },
    #[error("offline mode: no cached response for this prompt (key {0})")]
    OfflineCacheMiss(String),
    #[error("cache io: {0}")]
    CacheIo(#[from] std::io::Error),
}

fn default_temperature() -> f64 {
    1.0
}

fn default_max_retries() -> u32 {
    3
}

fn default_timeout_secs() -> u64 {
    60
}

fn default_api_key_env() -> String {
    "LLM_API_KEY".to_string()
}

fn default_backoff_ms() -> u64 {
    250
}

fn default_max_concurrent() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    /// Full chat-completions endpoint URL.
    pub base_url: String,
    pub model_name: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    /// Name of the environment variable holding the API key.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    /// First retry delay; doubles on each subsequent retry.
    #[serde(default = "default_backoff_ms")]
    pub backoff_base_ms: u64,
    #[serde(default = "default_max_concurrent")]
    pub max_concurrent: usize,
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(GatewayError::InvalidConfig(format!(
                "base_url must be http(s), got `{}`",
                self.base_url
            )));
        }
        if self.base_url.len() <= "https://".len() {
            return Err(GatewayError::InvalidConfig("base_url has no host".into()));
        }
        if self.max_retries > 10 {
            return Err(GatewayError::InvalidConfig(
                "max_retries must be at most 10".into(),
            ));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(GatewayError::InvalidConfig(
                "temperature must be a finite non-negative number".into(),
            ));
        }
        if self.max_concurrent == 0 {
            return Err(GatewayError::InvalidConfig(
                "max_concurrent must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One cached generation. Immutable once written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub model_name: String,
    pub temperature: f64,
    pub prompt: String,
    pub response_text: String,
    pub timestamp: DateTime<Utc>,
}

/// Cache key: SHA-256 over length-prefixed (model, prompt, temperature
/// bits), hex encoded.
pub fn cache_key(model_name: &str, prompt: &str, temperature: f64) -> String {
    let mut hasher = Sha256::new();
    for field in [model_name.as_bytes(), prompt.as_bytes()] {
        hasher.update((field.len() as u64).to_le_bytes());
        hasher.update(field);
    }
    hasher.update(temperature.to_bits().to_le_bytes());
    crate::hashing::hex(&hasher.finalize())
}

/// Delay before retry number `attempt` (0-based): base * 2^attempt, capped
/// at 30 s. Non-decreasing in `attempt`.
pub fn backoff_delay(base_ms: u64, attempt: u32) -> Duration {
    let ms = base_ms.saturating_mul(1u64 << attempt.min(20));
    Duration::from_millis(ms.min(30_000))
}

pub struct Gateway {
    config: LlmConfig,
    agent: ureq::Agent,
    cache_dir: Option<PathBuf>,
    offline: bool,
    gate: Semaphore,
    inflight: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl Gateway {
    pub fn new(config: LlmConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build();
        Ok(Self {
            agent: ureq::Agent::new_with_config(agent_config),
            gate: Semaphore::new(config.max_concurrent),
            config,
            cache_dir: None,
            offline: false,
            inflight: Mutex::new(HashMap::new()),
        })
    }

    /// Enables the persistent response cache under `dir`.
    pub fn with_cache(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    /// In offline mode a cache miss is an error instead of a network call.
    pub fn offline(mut self, offline: bool) -> Self {
        self.offline = offline;
        self
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    /// One generation without the cache: checks the API key first, then
    /// POSTs, retrying timeouts, 429 and 5xx with exponential backoff.
    pub fn generate(&self, prompt: &str) -> Result<String, GatewayError> {
        let api_key = std::env::var(&self.config.api_key_env)
            .map_err(|_| GatewayError::MissingApiKey(self.config.api_key_env.clone()))?;
        let attempts = self.config.max_retries + 1;
        let mut last_transient: Option<GatewayError> = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = backoff_delay(self.config.backoff_base_ms, attempt - 1);
                log::debug!(
                    "gateway retry {attempt}/{} after {delay:?}",
                    self.config.max_retries
                );
                std::thread::sleep(delay);
            }
            match self.send_once(prompt, &api_key) {
                Ok(text) => return Ok(text),
                Err(e) if is_transient(&e) => last_transient = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(GatewayError::RetryExhausted {
            attempts,
            last: last_transient
                .map(|e| e.to_string())
                .unwrap_or_else(|| "no attempt made".into()),
        })
    }

    fn send_once(&self, prompt: &str, api_key: &str) -> Result<String, GatewayError> {
        let _permit = self.gate.acquire();
        let body = serde_json::json!({
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        });
        log::debug!(
            "gateway request: model={} prompt_chars={}",
            self.config.model_name,
            prompt.chars().count()
        );
        let mut response = self
            .agent
            .post(&self.config.base_url)
            .header("Authorization", &format!("Bearer {api_key}"))
            .send_json(&body)
            .map_err(classify_transport)?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(classify_transport)?;
        match status {
            200..=299 => parse_completion(&text),
            401 | 403 => Err(GatewayError::AuthRejected(status)),
            status => Err(GatewayError::Status {
                status,
                excerpt: excerpt(&text),
            }),
        }
    }

    /// Cache-backed generation. Concurrent misses for the same key are
    /// collapsed to a single network call; corrupt cache files are treated
    /// as misses and rewritten.
    pub fn generate_cached(&self, prompt: &str) -> Result<String, GatewayError> {
        let Some(cache_dir) = &self.cache_dir else {
            // no cache configured: offline mode cannot be satisfied
            if self.offline {
                return Err(GatewayError::OfflineCacheMiss("<no cache dir>".into()));
            }
            return self.generate(prompt);
        };
        let key = cache_key(&self.config.model_name, prompt, self.config.temperature);
        let path = cache_dir.join(format!("{key}.json"));

        if let Some(text) = self.read_cache(&path, &key) {
            return Ok(text);
        }
        if self.offline {
            return Err(GatewayError::OfflineCacheMiss(key));
        }

        let lock = {
            let mut map = self.inflight.lock().expect("inflight map poisoned");
            Arc::clone(map.entry(key.clone()).or_default())
        };
        let _inflight = lock.lock().expect("inflight key lock poisoned");
        // another worker may have finished while this one waited
        if let Some(text) = self.read_cache(&path, &key) {
            return Ok(text);
        }
        let response_text = self.generate(prompt)?;
        let entry = CacheEntry {
            key: key.clone(),
            model_name: self.config.model_name.clone(),
            temperature: self.config.temperature,
            prompt: prompt.to_string(),
            response_text: response_text.clone(),
            timestamp: Utc::now(),
        };
        write_cache_entry(cache_dir, &path, &entry)?;
        Ok(response_text)
    }

    fn read_cache(&self, path: &Path, key: &str) -> Option<String> {
        let bytes = std::fs::read(path).ok()?;
        match serde_json::from_slice::<CacheEntry>(&bytes) {
            Ok(entry) if entry.key == key => Some(entry.response_text),
            Ok(entry) => {
                log::warn!(
                    "cache file {} carries key {}, expected {key}; treating as a miss",
                    path.display(),
                    entry.key
                );
                None
            }
            Err(e) => {
                log::warn!(
                    "corrupt cache file {} ({e}); treating as a miss",
                    path.display()
                );
                None
            }
        }
    }
}

/// Serializes and atomically installs a cache entry (write to a temp file,
/// then rename).
pub fn write_cache_entry(
    cache_dir: &Path,
    path: &Path,
    entry: &CacheEntry,
) -> Result<(), GatewayError> {
    std::fs::create_dir_all(cache_dir)?;
    let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
    let bytes = serde_json::to_vec_pretty(entry).expect("cache entry serializes");
    std::fs::write(&tmp, &bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn parse_completion(body: &str) -> Result<String, GatewayError> {
    let parsed: serde_json::Value = serde_json::from_str(body)
        .map_err(|e| GatewayError::MalformedResponse(format!("{e}: {}", excerpt(body))))?;
    parsed
        .pointer("/choices/0/message/content")
        .and_then(|v| v.as_str())
        .map(|s| s.to_string())
        .ok_or_else(|| {
            GatewayError::MalformedResponse(format!(
                "missing choices[0].message.content in {}",
                excerpt(body)
            ))
        })
}

fn classify_transport(e: ureq::Error) -> GatewayError {
    match e {
        ureq::Error::Timeout(_) => GatewayError::Timeout,
        other => GatewayError::Transport(other.to_string()),
    }
}

fn is_transient(e: &GatewayError) -> bool {
    match e {
        GatewayError::Timeout | GatewayError::Transport(_) => true,
        GatewayError::Status { status, .. } => *status == 429 || (500..600).contains(status),
        _ => false,
    }
}

fn excerpt(body: &str) -> String {
    const LIMIT: usize = 200;
    if body.chars().count() <= LIMIT {
        body.to_string()
    } else {
        let cut: String = body.chars().take(LIMIT).collect();
        format!("{cut}…")
    }
}
