//! Run configuration: the JSON file consumed by `gauntlet eval`, plus the
//! builders that turn detector specs into live detectors.
//!
//! Experiments are configuration. A run config names the benchmarks, the
//! strategies (with seeds), the detector specs, the defense flag, the cache
//! directory and the output directory, and is digested so reports can be
//! traced back to the exact configuration that produced them.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{load_corpus, CorpusError};
use crate::detect::{
    calibrate_thresholds, ClassifierDetector, ClassifierModel, DetectError, Detector,
    PerplexityDetector, PerplexityThresholds, RemoteDetector, RemoteDetectorConfig, RemoteError,
};
use crate::gateway::{Gateway, GatewayError, LlmConfig};
use crate::harness::{BenchmarkFormat, DefenseConfig};
use crate::ngram::{NgramError, NgramModel};
use crate::perturb::{PerturbError, Strategy};
use crate::text::{Document, Origin};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Strategy(#[from] PerturbError),
    #[error("detector `{id}`: {source}")]
    DetectorModel {
        id: String,
        #[source]
        source: NgramError,
    },
    #[error("detector `{id}`: {source}")]
    DetectorBuild {
        id: String,
        #[source]
        source: DetectError,
    },
    #[error("detector `{id}`: {source}")]
    DetectorRemote {
        id: String,
        #[source]
        source: RemoteError,
    },
    #[error(transparent)]
    Calibration(#[from] CorpusError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub path: PathBuf,
    pub format: BenchmarkFormat,
    /// Overrides the file-stem benchmark name.
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub kind: String,
    /// Edit-strategy seed; defaults to the run seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_perplexity_id() -> String {
    "perplexity".to_string()
}

fn default_classifier_id() -> String {
    "classifier".to_string()
}

/// Labeled corpora used to calibrate perplexity thresholds at startup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSpec {
    pub ai: PathBuf,
    pub human: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerplexityDetectorSpec {
    #[serde(default = "default_perplexity_id")]
    pub id: String,
    pub model: PathBuf,
    /// Explicit cuts; mutually exclusive with `calibration`.
    #[serde(default)]
    pub thresholds: Option<PerplexityThresholds>,
    #[serde(default)]
    pub calibration: Option<CalibrationSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierDetectorSpec {
    #[serde(default = "default_classifier_id")]
    pub id: String,
    pub model: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DetectorSpec {
    Perplexity(PerplexityDetectorSpec),
    Classifier(ClassifierDetectorSpec),
    Remote(RemoteDetectorConfig),
}

impl DetectorSpec {
    pub fn id(&self) -> &str {
        match self {
            DetectorSpec::Perplexity(s) => &s.id,
            DetectorSpec::Classifier(s) => &s.id,
            DetectorSpec::Remote(c) => &c.id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub benchmarks: Vec<BenchmarkSpec>,
    pub strategies: Vec<StrategySpec>,
    pub detectors: Vec<DetectorSpec>,
    #[serde(default)]
    pub defense: DefenseConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub llm: Option<LlmConfig>,
    #[serde(default)]
    pub offline: bool,
    /// Worker cap; defaults to the number of cores.
    #[serde(default)]
    pub jobs: Option<usize>,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Reads and parses a run config, returning it with the SHA-256 digest
    /// of the raw file bytes.
    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let bytes = std::fs::read(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config: RunConfig = serde_json::from_slice(&bytes)?;
        config.validate()?;
        let digest = crate::hashing::hex(&Sha256::digest(&bytes));
        Ok((config, digest))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.benchmarks.is_empty() {
            return Err(ConfigError::Invalid("no benchmarks configured".into()));
        }
        if self.strategies.is_empty() {
            return Err(ConfigError::Invalid("no strategies configured".into()));
        }
        if self.detectors.is_empty() {
            return Err(ConfigError::Invalid("no detectors configured".into()));
        }
        let mut ids: Vec<&str> = self.detectors.iter().map(|d| d.id()).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.detectors.len() {
            return Err(ConfigError::Invalid("detector ids must be unique".into()));
        }
        Ok(())
    }

    /// Materializes the strategy list, defaulting edit seeds to the run
    /// seed.
    pub fn strategies(&self) -> Result<Vec<Strategy>, ConfigError> {
        self.strategies
            .iter()
            .map(|s| Ok(Strategy::from_id(&s.kind, s.seed.unwrap_or(self.seed))?))
            .collect()
    }

    /// Builds the gateway when an LLM endpoint is configured.
    /// `offline_override` forces offline mode on top of the config flag.
    pub fn build_gateway(&self, offline_override: bool) -> Result<Option<Gateway>, ConfigError> {
        let Some(llm) = &self.llm else {
            return Ok(None);
        };
        let mut gateway = Gateway::new(llm.clone())?;
        if let Some(dir) = &self.cache_dir {
            gateway = gateway.with_cache(dir);
        }
        Ok(Some(gateway.offline(self.offline || offline_override)))
    }

    pub fn build_detectors(&self) -> Result<Vec<Box<dyn Detector>>, ConfigError> {
        self.detectors.iter().map(build_detector).collect()
    }
}

/// Turns one detector spec into a live detector, loading models and running
/// calibration as needed.
pub fn build_detector(spec: &DetectorSpec) -> Result<Box<dyn Detector>, ConfigError> {
    match spec {
        DetectorSpec::Perplexity(s) => {
            if s.thresholds.is_some() == s.calibration.is_some() {
                return Err(ConfigError::Invalid(format!(
                    "detector `{}`: exactly one of thresholds or calibration must be given",
                    s.id
                )));
            }
            let model =
                NgramModel::load(&s.model).map_err(|source| ConfigError::DetectorModel {
                    id: s.id.clone(),
                    source,
                })?;
            let thresholds = match (&s.thresholds, &s.calibration) {
                (Some(t), None) => {
                    PerplexityThresholds::new(t.ppl_cut, t.burst_cut).map_err(|source| {
                        ConfigError::DetectorBuild {
                            id: s.id.clone(),
                            source,
                        }
                    })?
                }
                (None, Some(c)) => {
                    let mut labeled = Vec::new();
                    for (i, text) in load_corpus(&c.ai)?.into_iter().enumerate() {
                        labeled.push(Document::new(
                            format!("calib-ai:{i}"),
                            "",
                            text,
                            Origin::AiGenerated,
                        ));
                    }
                    for (i, text) in load_corpus(&c.human)?.into_iter().enumerate() {
                        labeled.push(Document::new(
                            format!("calib-human:{i}"),
                            "",
                            text,
                            Origin::HumanWritten,
                        ));
                    }
                    calibrate_thresholds(&model, &labeled).map_err(|source| {
                        ConfigError::DetectorBuild {
                            id: s.id.clone(),
                            source,
                        }
                    })?
                }
                // both-or-neither rejected above
                _ => unreachable!("threshold source validated before model load"),
            };
            Ok(Box::new(
                PerplexityDetector::new(model, thresholds).with_id(s.id.clone()),
            ))
        }
        DetectorSpec::Classifier(s) => {
            let model =
                ClassifierModel::load(&s.model).map_err(|source| ConfigError::DetectorBuild {
                    id: s.id.clone(),
                    source,
                })?;
            Ok(Box::new(
                ClassifierDetector::new(model).with_id(s.id.clone()),
            ))
        }
        DetectorSpec::Remote(c) => {
            let detector =
                RemoteDetector::new(c.clone()).map_err(|source| ConfigError::DetectorRemote {
                    id: c.id.clone(),
                    source,
                })?;
            Ok(Box::new(detector))
        }
    }
}
