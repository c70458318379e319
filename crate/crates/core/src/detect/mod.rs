//! Detector abstraction and the two local detector archetypes.
//!
//! Every detector answers the same question — is this document AI-generated,
//! human-written, or neither decisively — through one shared [`Detector`]
//! interface, so the evaluation harness never cares which kind it is
//! running. The perplexity detector is the white-box archetype (language
//! model statistics plus thresholds); the classifier is the black-box
//! archetype (supervised binary classifier over hashed character n-grams);
//! the remote adapter forwards to an HTTP service.

mod classifier;
mod remote;

pub use classifier::{
    feature_bucket, featurize, train_classifier, ClassifierConfig, ClassifierDetector,
    ClassifierModel, SparseVector, TrainReport,
};
pub use remote::{RemoteDetector, RemoteDetectorConfig, RemoteError, ResponseMapping};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ngram::{NgramError, NgramModel};
use crate::text::{Document, Origin};

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("document text is empty or whitespace")]
    DegenerateText,
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("need at least one AI-generated and one human-written document")]
    MissingClass,
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("invalid classifier configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Score(#[from] NgramError),
    #[error(transparent)]
    Remote(#[from] RemoteError),
    #[error("model io: {0}")]
    Io(#[from] std::io::Error),
    #[error("model format: {0}")]
    Format(String),
}

/// Detector output class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "AI")]
    Ai,
    Human,
    Tie,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Ai => "AI",
            Verdict::Human => "Human",
            Verdict::Tie => "Tie",
        })
    }
}

/// Verdict plus whichever raw scores the detector computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub detector_id: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perplexity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burstiness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ai_probability: Option<f64>,
}

/// The one interface the harness sees. Implementations must be shareable
/// across worker threads.
pub trait Detector: Send + Sync {
    fn id(&self) -> &str;
    fn detect(&self, doc: &Document) -> Result<DetectionResult, DetectError>;
}

/// Decision cuts for the perplexity detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerplexityThresholds {
    pub ppl_cut: f64,
    pub burst_cut: f64,
}

impl PerplexityThresholds {
    pub fn new(ppl_cut: f64, burst_cut: f64) -> Result<Self, DetectError> {
        if !ppl_cut.is_finite() || ppl_cut <= 1.0 {
            return Err(DetectError::InvalidThresholds(format!(
                "ppl_cut must be a finite number above 1, got {ppl_cut}"
            )));
        }
        if !burst_cut.is_finite() || burst_cut < 0.0 {
            return Err(DetectError::InvalidThresholds(format!(
                "burst_cut must be a finite non-negative number, got {burst_cut}"
            )));
        }
        Ok(Self { ppl_cut, burst_cut })
    }
}

/// White-box archetype: low perplexity and low burstiness read as machine
/// text, high in both reads as human text, and a split decision is a tie.
pub struct PerplexityDetector {
    model: NgramModel,
    thresholds: PerplexityThresholds,
    id: String,
}

impl PerplexityDetector {
    pub fn new(model: NgramModel, thresholds: PerplexityThresholds) -> Self {
        Self {
            model,
            thresholds,
            id: "perplexity".to_string(),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn thresholds(&self) -> PerplexityThresholds {
        self.thresholds
    }

    pub fn model(&self) -> &NgramModel {
        &self.model
    }

    /// (perplexity, burstiness) of a text under the detector's model.
    pub fn scores(&self, text: &str) -> Result<(f64, f64), DetectError> {
        if text.trim().is_empty() {
            return Err(DetectError::DegenerateText);
        }
        let ppl = self.model.perplexity(text)?.value;
        let burst = self.model.burstiness(text)?.value;
        Ok((ppl, burst))
    }

    /// Pure decision rule over already computed scores.
    pub fn verdict_for(th: &PerplexityThresholds, ppl: f64, burst: f64) -> Verdict {
        let low_ppl = ppl < th.ppl_cut;
        let low_burst = burst < th.burst_cut;
        match (low_ppl, low_burst) {
            (true, true) => Verdict::Ai,
            (false, false) => Verdict::Human,
            _ => Verdict::Tie,
        }
    }
}

impl Detector for PerplexityDetector {
    fn id(&self) -> &str {
        &self.id
    }

    fn detect(&self, doc: &Document) -> Result<DetectionResult, DetectError> {
        let (ppl, burst) = self.scores(&doc.text)?;
        Ok(DetectionResult {
            detector_id: self.id.clone(),
            verdict: Self::verdict_for(&self.thresholds, ppl, burst),
            perplexity: Some(ppl),
            burstiness: Some(burst),
            ai_probability: None,
        })
    }
}

/// Midpoint calibration: each cut is halfway between the median score of
/// the AI-generated documents and the median score of the human-written
/// ones. Deterministic for a fixed input order; `Unknown` documents are
/// ignored.
pub fn calibrate_thresholds(
    model: &NgramModel,
    labeled: &[Document],
) -> Result<PerplexityThresholds, DetectError> {
    let mut ai = Vec::new();
    let mut human = Vec::new();
    for doc in labeled {
        if doc.text.trim().is_empty() {
            return Err(DetectError::DegenerateText);
        }
        let scores = (
            model.perplexity(&doc.text)?.value,
            model.burstiness(&doc.text)?.value,
        );
        match doc.origin {
            Origin::AiGenerated => ai.push(scores),
            Origin::HumanWritten => human.push(scores),
            Origin::Unknown => {}
        }
    }
    if ai.is_empty() || human.is_empty() {
        return Err(DetectError::MissingClass);
    }
    let ppl_cut = (median(ai.iter().map(|s| s.0)) + median(human.iter().map(|s| s.0))) / 2.0;
    let burst_cut = (median(ai.iter().map(|s| s.1)) + median(human.iter().map(|s| s.1))) / 2.0;
    PerplexityThresholds::new(ppl_cut, burst_cut)
        .map_err(|e| DetectError::Calibration(e.to_string()))
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
