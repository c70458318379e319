//! HTTP adapter for third-party detection services.
//!
//! The adapter POSTs the document text using a configurable JSON template,
//! extracts one response field, and maps it to a verdict either by score
//! threshold or by label table. Failures are reported as errors carrying
//! status and a body excerpt; the adapter never invents a verdict.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{DetectError, DetectionResult, Detector, Verdict};
use crate::sync::Semaphore;
use crate::text::Document;

/// Placeholder replaced by the document text in every string leaf of the
/// request template.
pub const TEXT_PLACEHOLDER: &str = "{{text}}";

const EXCERPT_CHARS: usize = 200;

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("auth environment variable `{0}` is not set")]
    MissingAuth(String),
    #[error("request timed out")]
    Timeout,
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("service returned status {status}: {excerpt}")]
    Status { status: u16, excerpt: String },
    #[error("response not mappable to a verdict: {0}")]
    Unmappable(String),
    #[error("invalid remote detector config: {0}")]
    InvalidConfig(String),
}

/// How the extracted response field becomes a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseMapping {
    /// Numeric score in [0, 1]: `score >= ai_threshold` reads as AI,
    /// anything within `tie_band` of the threshold reads as a tie.
    Score {
        ai_threshold: f64,
        #[serde(default)]
        tie_band: f64,
    },
    /// Hard labels matched case-insensitively against the given tables.
    Label {
        ai: Vec<String>,
        human: Vec<String>,
        #[serde(default)]
        tie: Vec<String>,
    },
}

fn default_timeout_secs() -> u64 {
    30
}

fn default_max_concurrent() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteDetectorConfig {
    pub id: String,
    pub url: String,
    /// JSON body template; `{{text}}` in any string leaf is replaced by the
    /// document text. Defaults to `{"text": "{{text}}"}`.
    #[serde(default)]
    pub request_template: Option<Value>,
    /// JSON pointer (or bare field name) of the score/label field.
    pub response_field: String,
    pub mapping: ResponseMapping,
    /// Header to carry the secret, e.g. "Authorization". The secret itself
    /// only ever comes from the environment.
    #[serde(default)]
    pub auth_header: Option<String>,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_concurrent")]
    pub max_concurrent: usize,
}

pub struct RemoteDetector {
    config: RemoteDetectorConfig,
    agent: ureq::Agent,
    gate: Semaphore,
}

impl RemoteDetector {
    pub fn new(config: RemoteDetectorConfig) -> Result<Self, RemoteError> {
        if !(config.url.starts_with("http://") || config.url.starts_with("https://")) {
            return Err(RemoteError::InvalidConfig(format!(
                "url must be http(s), got `{}`",
                config.url
            )));
        }
        if config.auth_header.is_some() != config.api_key_env.is_some() {
            return Err(RemoteError::InvalidConfig(
                "auth_header and api_key_env must be configured together".into(),
            ));
        }
        if config.max_concurrent == 0 {
            return Err(RemoteError::InvalidConfig(
                "max_concurrent must be at least 1".into(),
            ));
        }
        if let ResponseMapping::Score {
            ai_threshold,
            tie_band,
        } = &config.mapping
        {
            if !ai_threshold.is_finite() || !tie_band.is_finite() || *tie_band < 0.0 {
                return Err(RemoteError::InvalidConfig("bad score mapping".into()));
            }
        }
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build();
        let gate = Semaphore::new(config.max_concurrent);
        Ok(Self {
            agent: ureq::Agent::new_with_config(agent_config),
            config,
            gate,
        })
    }

    pub fn config(&self) -> &RemoteDetectorConfig {
        &self.config
    }

    fn request_body(&self, text: &str) -> Value {
        match &self.config.request_template {
            Some(template) => substitute_text(template, text),
            None => serde_json::json!({ "text": text }),
        }
    }

    fn map_response(&self, body: &Value) -> Result<(Verdict, Option<f64>), RemoteError> {
        let pointer = normalize_pointer(&self.config.response_field);
        let field = body.pointer(&pointer).ok_or_else(|| {
            RemoteError::Unmappable(format!(
                "field `{}` missing in response {}",
                self.config.response_field,
                excerpt(&body.to_string())
            ))
        })?;
        match &self.config.mapping {
            ResponseMapping::Score {
                ai_threshold,
                tie_band,
            } => {
                let score = field.as_f64().ok_or_else(|| {
                    RemoteError::Unmappable(format!("field is not a number: {field}"))
                })?;
                if !(0.0..=1.0).contains(&score) {
                    return Err(RemoteError::Unmappable(format!(
                        "score {score} outside [0, 1]"
                    )));
                }
                let verdict = if (score - ai_threshold).abs() <= *tie_band {
                    Verdict::Tie
                } else if score >= *ai_threshold {
                    Verdict::Ai
                } else {
                    Verdict::Human
                };
                Ok((verdict, Some(score)))
            }
            ResponseMapping::Label { ai, human, tie } => {
                let label = field.as_str().ok_or_else(|| {
                    RemoteError::Unmappable(format!("field is not a string: {field}"))
                })?;
                let matches =
                    |table: &[String]| table.iter().any(|l| l.eq_ignore_ascii_case(label));
                if matches(ai) {
                    Ok((Verdict::Ai, None))
                } else if matches(human) {
                    Ok((Verdict::Human, None))
                } else if matches(tie) {
                    Ok((Verdict::Tie, None))
                } else {
                    Err(RemoteError::Unmappable(format!("unknown label `{label}`")))
                }
            }
        }
    }

    fn call(&self, doc: &Document) -> Result<(Verdict, Option<f64>), RemoteError> {
        let _permit = self.gate.acquire();
        let mut request = self.agent.post(&self.config.url);
        if let (Some(header), Some(env_name)) = (&self.config.auth_header, &self.config.api_key_env)
        {
            let secret =
                std::env::var(env_name).map_err(|_| RemoteError::MissingAuth(env_name.clone()))?;
            request = request.header(header.as_str(), secret.as_str());
        }
        log::debug!(
            "remote detector {}: POST {} ({} chars)",
            self.config.id,
            self.config.url,
            doc.text.chars().count()
        );
        let mut response = request
            .send_json(self.request_body(&doc.text))
            .map_err(classify_transport)?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(classify_transport)?;
        if !(200..300).contains(&status) {
            return Err(RemoteError::Status {
                status,
                excerpt: excerpt(&body),
            });
        }
        let parsed: Value = serde_json::from_str(&body)
            .map_err(|e| RemoteError::Unmappable(format!("{e}: {}", excerpt(&body))))?;
        self.map_response(&parsed)
    }
}

impl Detector for RemoteDetector {
    fn id(&self) -> &str {
        &self.config.id
    }

    fn detect(&self, doc: &Document) -> Result<DetectionResult, DetectError> {
        let (verdict, score) = self.call(doc)?;
        Ok(DetectionResult {
            detector_id: self.config.id.clone(),
            verdict,
            perplexity: None,
            burstiness: None,
            ai_probability: score,
        })
    }
}

fn classify_transport(e: ureq::Error) -> RemoteError {
    match e {
        ureq::Error::Timeout(_) => RemoteError::Timeout,
        other => RemoteError::Transport(other.to_string()),
    }
}

fn substitute_text(template: &Value, text: &str) -> Value {
    match template {
        Value::String(s) => Value::String(s.replace(TEXT_PLACEHOLDER, text)),
        Value::Array(items) => {
            Value::Array(items.iter().map(|v| substitute_text(v, text)).collect())
        }
        Value::Object(map) => Value::Object(
            map.iter()
                .map(|(k, v)| (k.clone(), substitute_text(v, text)))
                .collect(),
        ),
        other => other.clone(),
    }
}

fn normalize_pointer(field: &str) -> String {
    if field.starts_with('/') {
        field.to_string()
    } else {
        format!("/{field}")
    }
}

fn excerpt(body: &str) -> String {
    if body.chars().count() <= EXCERPT_CHARS {
        body.to_string()
    } else {
        let cut: String = body.chars().take(EXCERPT_CHARS).collect();
        format!("{cut}…")
    }
}
