//! Black-box detector archetype: logistic regression over hashed character
//! n-gram counts.
//!
//! The feature map is intentionally dumb and transparent: every character
//! n-gram in the configured length range is FNV-1a hashed into a
//! power-of-two bucket space and the bucket counts are L2-normalized. The
//! point is that a formal quirk like `" ,"` is one concrete bucket whose
//! learned weight can be inspected directly.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DetectError, DetectionResult, Detector, Verdict};
use crate::binio;
use crate::hashing::fnv1a64_chars;
use crate::text::{Document, Origin};

const MAGIC: &[u8; 4] = b"GCLF";
const FORMAT_VERSION: u32 = 1;

/// Sparse L2-normalized feature vector; components sorted by bucket index.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    pub components: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.components
            .iter()
            .map(|&(i, v)| dense[i as usize] * v)
            .sum()
    }

    pub fn get(&self, bucket: u32) -> f64 {
        self.components
            .binary_search_by_key(&bucket, |&(i, _)| i)
            .map(|at| self.components[at].1)
            .unwrap_or(0.0)
    }

    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|&(_, v)| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// Bucket index of a single n-gram under the same hash used by
/// [`featurize`]. `feature_dim` must be a power of two.
pub fn feature_bucket(gram: &str, feature_dim: u32) -> u32 {
    assert!(
        feature_dim.is_power_of_two(),
        "feature_dim must be a power of two"
    );
    let chars: Vec<char> = gram.chars().collect();
    (fnv1a64_chars(&chars) & u64::from(feature_dim - 1)) as u32
}

/// Hashed character n-gram counts of `text`, L2-normalized. Deterministic
/// across runs and platforms: the hash is seedless FNV-1a over UTF-8 bytes.
pub fn featurize(text: &str, ngram_range: (usize, usize), feature_dim: u32) -> SparseVector {
    assert!(
        feature_dim.is_power_of_two(),
        "feature_dim must be a power of two"
    );
    assert!(
        ngram_range.0 >= 1 && ngram_range.0 <= ngram_range.1,
        "ngram_range must satisfy 1 <= min <= max"
    );
    let chars: Vec<char> = text.chars().collect();
    let mask = u64::from(feature_dim - 1);
    let mut counts: HashMap<u32, f64> = HashMap::new();
    for len in ngram_range.0..=ngram_range.1 {
        if len > chars.len() {
            break;
        }
        for window in chars.windows(len) {
            let bucket = (fnv1a64_chars(window) & mask) as u32;
            *counts.entry(bucket).or_insert(0.0) += 1.0;
        }
    }
    let mut components: Vec<(u32, f64)> = counts.into_iter().collect();
    components.sort_unstable_by_key(|&(i, _)| i);
    let norm = components.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, v) in &mut components {
            *v /= norm;
        }
    }
    SparseVector { components }
}

/// Training hyperparameters for [`train_classifier`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub ngram_range: (usize, usize),
    pub feature_dim: u32,
    pub tie_band: f64,
    /// Recorded with the run; training itself is deterministic (full-batch
    /// gradient descent from zero weights, samples in input order).
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        // L2-normalized features keep per-sample gradients below unit
        // norm, so full-batch descent tolerates (and needs) a hot rate.
        Self {
            learning_rate: 4.0,
            epochs: 1500,
            ngram_range: (1, 4),
            feature_dim: 1 << 18,
            tie_band: 0.0,
            seed: 0,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<(), DetectError> {
        if !self.feature_dim.is_power_of_two() {
            return Err(DetectError::InvalidConfig(format!(
                "feature_dim must be a power of two, got {}",
                self.feature_dim
            )));
        }
        if self.ngram_range.0 < 1 || self.ngram_range.0 > self.ngram_range.1 {
            return Err(DetectError::InvalidConfig(format!(
                "ngram_range must satisfy 1 <= min <= max, got {:?}",
                self.ngram_range
            )));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(DetectError::InvalidConfig(
                "learning_rate must be positive and finite".into(),
            ));
        }
        if !(0.0..0.5).contains(&self.tie_band) {
            return Err(DetectError::InvalidConfig(
                "tie_band must be in [0, 0.5)".into(),
            ));
        }
        Ok(())
    }
}

/// Trained logistic-regression detector state.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub feature_dim: u32,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub ngram_range: (usize, usize),
    pub tie_band: f64,
}

impl ClassifierModel {
    /// P(AI) for a text: `sigmoid(w · featurize(text) + b)`.
    pub fn ai_probability(&self, text: &str) -> f64 {
        let x = featurize(text, self.ngram_range, self.feature_dim);
        sigmoid(x.dot(&self.weights) + self.bias)
    }

    /// Verdict from a probability under this model's tie band.
    pub fn verdict_for(&self, p: f64) -> Verdict {
        if p > 0.5 + self.tie_band {
            Verdict::Ai
        } else if p < 0.5 - self.tie_band {
            Verdict::Human
        } else {
            Verdict::Tie
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), DetectError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        binio::write_u32(&mut w, FORMAT_VERSION)?;
        binio::write_u32(&mut w, self.feature_dim)?;
        binio::write_u32(&mut w, self.ngram_range.0 as u32)?;
        binio::write_u32(&mut w, self.ngram_range.1 as u32)?;
        binio::write_f64(&mut w, self.tie_band)?;
        binio::write_f64(&mut w, self.bias)?;
        binio::write_u32(&mut w, self.weights.len() as u32)?;
        for &weight in &self.weights {
            binio::write_f64(&mut w, weight)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DetectError> {
        let mut r = BufReader::new(File::open(path)?);
        Self::read(&mut r)
    }

    fn read<R: Read>(r: &mut R) -> Result<Self, DetectError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(DetectError::Format("not a classifier model file".into()));
        }
        let version = binio::read_u32(r).map_err(truncated)?;
        if version != FORMAT_VERSION {
            return Err(DetectError::Format(format!(
                "unsupported classifier file version {version}"
            )));
        }
        let feature_dim = binio::read_u32(r).map_err(truncated)?;
        if !feature_dim.is_power_of_two() {
            return Err(DetectError::Format(
                "feature_dim is not a power of two".into(),
            ));
        }
        let min = binio::read_u32(r).map_err(truncated)? as usize;
        let max = binio::read_u32(r).map_err(truncated)? as usize;
        if min < 1 || min > max {
            return Err(DetectError::Format("bad ngram range".into()));
        }
        let tie_band = binio::read_f64(r).map_err(truncated)?;
        let bias = binio::read_f64(r).map_err(truncated)?;
        let len = binio::read_u32(r).map_err(truncated)? as usize;
        if len != feature_dim as usize {
            return Err(DetectError::Format("weight vector length mismatch".into()));
        }
        let mut weights = Vec::with_capacity(len);
        for _ in 0..len {
            weights.push(binio::read_f64(r).map_err(truncated)?);
        }
        Ok(Self {
            feature_dim,
            weights,
            bias,
            ngram_range: (min, max),
            tie_band,
        })
    }
}

fn truncated(e: io::Error) -> DetectError {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        DetectError::Format("truncated classifier file".into())
    } else {
        DetectError::Io(e)
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Numerically stable binary cross-entropy of a logit against a 0/1 label.
fn cross_entropy(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

/// Training output: the model plus the mean loss after each epoch.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: ClassifierModel,
    pub epoch_losses: Vec<f64>,
}

/// Full-batch gradient descent on cross-entropy from zero-initialized
/// weights. AI-generated documents are labeled 1, human-written 0;
/// documents with unknown origin are skipped.
pub fn train_classifier(
    labeled: &[Document],
    config: &ClassifierConfig,
) -> Result<TrainReport, DetectError> {
    config.validate()?;
    let mut samples: Vec<(SparseVector, f64)> = Vec::new();
    let (mut saw_ai, mut saw_human) = (false, false);
    for doc in labeled {
        let y = match doc.origin {
            Origin::AiGenerated => {
                saw_ai = true;
                1.0
            }
            Origin::HumanWritten => {
                saw_human = true;
                0.0
            }
            Origin::Unknown => continue,
        };
        samples.push((
            featurize(&doc.text, config.ngram_range, config.feature_dim),
            y,
        ));
    }
    if !saw_ai || !saw_human {
        return Err(DetectError::MissingClass);
    }

    let dim = config.feature_dim as usize;
    let m = samples.len() as f64;
    let mut weights = vec![0.0f64; dim];
    let mut bias = 0.0f64;
    let mut grad = vec![0.0f64; dim];
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_bias = 0.0f64;
        let mut loss = 0.0f64;
        for (x, y) in &samples {
            let z = x.dot(&weights) + bias;
            let err = sigmoid(z) - y;
            for &(i, v) in &x.components {
                grad[i as usize] += err * v;
            }
            grad_bias += err;
            loss += cross_entropy(z, *y);
        }
        let loss = loss / m;
        if !loss.is_finite() {
            return Err(DetectError::Training(format!(
                "loss became non-finite at epoch {epoch}"
            )));
        }
        let step = config.learning_rate / m;
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= step * g;
        }
        bias -= step * grad_bias;
        epoch_losses.push(loss);
    }

    Ok(TrainReport {
        model: ClassifierModel {
            feature_dim: config.feature_dim,
            weights,
            bias,
            ngram_range: config.ngram_range,
            tie_band: config.tie_band,
        },
        epoch_losses,
    })
}

/// [`Detector`] wrapper around a trained [`ClassifierModel`].
pub struct ClassifierDetector {
    model: ClassifierModel,
    id: String,
}

impl ClassifierDetector {
    pub fn new(model: ClassifierModel) -> Self {
        Self {
            model,
            id: "classifier".to_string(),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn model(&self) -> &ClassifierModel {
        &self.model
    }
}

impl Detector for ClassifierDetector {
    fn id(&self) -> &str {
        &self.id
    }

    fn detect(&self, doc: &Document) -> Result<DetectionResult, DetectError> {
        if doc.text.trim().is_empty() {
            return Err(DetectError::DegenerateText);
        }
        let p = self.model.ai_probability(&doc.text);
        Ok(DetectionResult {
            detector_id: self.id.clone(),
            verdict: self.model.verdict_for(p),
            perplexity: None,
            burstiness: None,
            ai_probability: Some(p),
        })
    }
}
