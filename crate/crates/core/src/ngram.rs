//! Additively smoothed order-n language model with perplexity and
//! burstiness scoring.
//!
//! Conditional probabilities use an order-n Markov context with add-alpha
//! smoothing over the observed vocabulary plus a reserved `UNK` symbol, so
//! every probability is strictly positive and perplexity stays finite even
//! on text the model has never seen. Scores are computed in log2 space and
//! exponentiated once at the end; the product-domain reading of the same
//! definition is used as an oracle in tests.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::binio;
use crate::text::{split_sentences, tokenize, TokenizeMode};

const MAGIC: &[u8; 4] = b"NGLM";
const FORMAT_VERSION: u32 = 1;

/// Reserved id for unknown tokens. Always present in the vocabulary.
const UNK_ID: u32 = 0;
/// Begin-of-text padding id used in contexts only; never part of the vocab.
const BOS_ID: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum NgramError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("model order must be at least 1")]
    InvalidOrder,
    #[error("smoothing alpha must be positive and finite")]
    InvalidAlpha,
    #[error("text produced no tokens")]
    EmptyText,
    #[error("probability {0} is outside (0, 1]")]
    InvalidProbability(f64),
    #[error("model io: {0}")]
    Io(#[from] io::Error),
    #[error("model format: {0}")]
    Format(String),
    #[error("unsupported model file version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
}

/// Exponentiated average negative log2 probability of a token sequence.
/// Always ≥ 1 when every conditional probability is ≤ 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerplexityScore {
    pub value: f64,
}

/// Population standard deviation of per-sentence perplexities.
/// Zero for documents with at most one sentence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstinessScore {
    pub value: f64,
}

#[derive(Debug, Clone, Default)]
struct ContextCounts {
    total: u64,
    continuations: HashMap<u32, u64>,
}

/// Trained smoothed n-gram model. Immutable once trained; safe to share
/// across scoring threads.
#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    mode: TokenizeMode,
    alpha: f64,
    /// id → surface; index 0 is the reserved UNK symbol.
    vocab: Vec<String>,
    vocab_index: HashMap<String, u32>,
    counts: HashMap<Box<[u32]>, ContextCounts>,
}

impl NgramModel {
    /// Trains on every order-n window of every document, with `order - 1`
    /// begin-of-text padding tokens per document.
    pub fn train<S: AsRef<str>>(
        corpus: &[S],
        order: usize,
        alpha: f64,
        mode: TokenizeMode,
    ) -> Result<Self, NgramError> {
        if corpus.is_empty() {
            return Err(NgramError::EmptyCorpus);
        }
        if order < 1 {
            return Err(NgramError::InvalidOrder);
        }
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(NgramError::InvalidAlpha);
        }

        let mut model = Self {
            order,
            mode,
            alpha,
            vocab: vec!["<unk>".to_string()],
            vocab_index: HashMap::new(),
            counts: HashMap::new(),
        };

        let mut saw_tokens = false;
        for doc in corpus {
            let stream = tokenize(doc.as_ref(), mode);
            if stream.is_empty() {
                continue;
            }
            saw_tokens = true;
            let ids: Vec<u32> = stream.surfaces().map(|s| model.intern(s)).collect();
            let mut padded = vec![BOS_ID; order - 1];
            padded.extend_from_slice(&ids);
            for i in 0..ids.len() {
                let ctx = &padded[i..i + order - 1];
                let tok = padded[i + order - 1];
                let entry = model
                    .counts
                    .entry(ctx.to_vec().into_boxed_slice())
                    .or_default();
                entry.total += 1;
                *entry.continuations.entry(tok).or_insert(0) += 1;
            }
        }
        if !saw_tokens {
            return Err(NgramError::EmptyCorpus);
        }
        Ok(model)
    }

    fn intern(&mut self, surface: &str) -> u32 {
        if let Some(&id) = self.vocab_index.get(surface) {
            return id;
        }
        let id = self.vocab.len() as u32;
        self.vocab.push(surface.to_string());
        self.vocab_index.insert(surface.to_string(), id);
        id
    }

    fn id_of(&self, surface: &str) -> u32 {
        self.vocab_index.get(surface).copied().unwrap_or(UNK_ID)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mode(&self) -> TokenizeMode {
        self.mode
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Vocabulary size including the reserved UNK symbol. This is the `V`
    /// in the smoothing denominator.
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    /// Number of token windows seen during training.
    pub fn trained_tokens(&self) -> u64 {
        self.counts.values().map(|c| c.total).sum()
    }

    /// Raw count of `token` following `context` (the last `order - 1`
    /// entries, BOS-padded if shorter). Zero for anything unseen.
    pub fn context_count(&self, context: &[&str], token: &str) -> u64 {
        let ctx = self.context_ids(context);
        self.counts
            .get(ctx.as_slice())
            .and_then(|c| c.continuations.get(&self.id_of(token)))
            .copied()
            .unwrap_or(0)
    }

    /// Total continuation count of `context`.
    pub fn context_total(&self, context: &[&str]) -> u64 {
        let ctx = self.context_ids(context);
        self.counts
            .get(ctx.as_slice())
            .map(|c| c.total)
            .unwrap_or(0)
    }

    fn context_ids(&self, context: &[&str]) -> Vec<u32> {
        let want = self.order - 1;
        let mut ids = vec![BOS_ID; want];
        let tail = context.len().min(want);
        for (slot, surface) in ids[want - tail..]
            .iter_mut()
            .zip(&context[context.len() - tail..])
        {
            *slot = self.id_of(surface);
        }
        ids
    }

    /// Smoothed conditional probability of `token` after `context`:
    /// `(count + alpha) / (total + alpha * V)`. Unseen surfaces map to UNK.
    /// Strictly positive for every input.
    pub fn cond_prob(&self, context: &[&str], token: &str) -> f64 {
        let ctx = self.context_ids(context);
        self.cond_prob_ids(&ctx, self.id_of(token))
    }

    fn cond_prob_ids(&self, ctx: &[u32], token: u32) -> f64 {
        let v = self.vocab.len() as f64;
        let (count, total) = match self.counts.get(ctx) {
            Some(c) => (c.continuations.get(&token).copied().unwrap_or(0), c.total),
            None => (0, 0),
        };
        (count as f64 + self.alpha) / (total as f64 + self.alpha * v)
    }

    /// Perplexity of `text` under this model:
    /// `exp2(-(1/N) * Σ log2 p(w_i | context_i))` over all N tokens, with
    /// begin-of-text padding for the first contexts.
    pub fn perplexity(&self, text: &str) -> Result<PerplexityScore, NgramError> {
        let stream = tokenize(text, self.mode);
        if stream.is_empty() {
            return Err(NgramError::EmptyText);
        }
        let ids: Vec<u32> = stream.surfaces().map(|s| self.id_of(s)).collect();
        let n = ids.len();
        let mut padded = vec![BOS_ID; self.order - 1];
        padded.extend_from_slice(&ids);
        let mut log_sum = 0.0f64;
        for i in 0..n {
            let p = self.cond_prob_ids(&padded[i..i + self.order - 1], padded[i + self.order - 1]);
            log_sum += p.log2();
        }
        Ok(PerplexityScore {
            value: (-log_sum / n as f64).exp2(),
        })
    }

    /// Population standard deviation of per-sentence perplexities
    /// (Welford's online recurrence). Zero when the text has one sentence.
    pub fn burstiness(&self, text: &str) -> Result<BurstinessScore, NgramError> {
        let sentences = split_sentences(text);
        if sentences.is_empty() {
            return Err(NgramError::EmptyText);
        }
        let mut count = 0usize;
        let mut mean = 0.0f64;
        let mut m2 = 0.0f64;
        for sentence in sentences {
            let ppl = self.perplexity(sentence)?.value;
            count += 1;
            let delta = ppl - mean;
            mean += delta / count as f64;
            m2 += delta * (ppl - mean);
        }
        let value = if count <= 1 {
            0.0
        } else {
            (m2 / count as f64).sqrt()
        };
        Ok(BurstinessScore { value })
    }

    /// Writes the versioned binary model file. Output bytes are
    /// deterministic for a given model.
    pub fn save(&self, path: &Path) -> Result<(), NgramError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        binio::write_u32(&mut w, FORMAT_VERSION)?;
        binio::write_u32(&mut w, self.order as u32)?;
        binio::write_u8(&mut w, mode_tag(self.mode))?;
        binio::write_f64(&mut w, self.alpha)?;
        // vocab, excluding the implicit UNK at id 0
        binio::write_u32(&mut w, (self.vocab.len() - 1) as u32)?;
        for surface in &self.vocab[1..] {
            binio::write_str(&mut w, surface)?;
        }
        let mut contexts: Vec<&Box<[u32]>> = self.counts.keys().collect();
        contexts.sort();
        binio::write_u64(&mut w, contexts.len() as u64)?;
        for ctx in contexts {
            for &id in ctx.iter() {
                binio::write_u32(&mut w, id)?;
            }
            let entry = &self.counts[ctx];
            binio::write_u64(&mut w, entry.total)?;
            let mut conts: Vec<(&u32, &u64)> = entry.continuations.iter().collect();
            conts.sort();
            binio::write_u32(&mut w, conts.len() as u32)?;
            for (id, count) in conts {
                binio::write_u32(&mut w, *id)?;
                binio::write_u64(&mut w, *count)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Loads a model file, rejecting wrong magic, unknown versions and
    /// truncated data. Never returns a partially constructed model.
    pub fn load(path: &Path) -> Result<Self, NgramError> {
        let mut r = BufReader::new(File::open(path)?);
        Self::read(&mut r)
    }

    fn read<R: Read>(r: &mut R) -> Result<Self, NgramError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(NgramError::Format("not an n-gram model file".into()));
        }
        let version = binio::read_u32(r).map_err(truncated)?;
        if version != FORMAT_VERSION {
            return Err(NgramError::Version { found: version });
        }
        let order = binio::read_u32(r).map_err(truncated)? as usize;
        if order < 1 {
            return Err(NgramError::Format("order field must be at least 1".into()));
        }
        let mode = match binio::read_u8(r).map_err(truncated)? {
            0 => TokenizeMode::Char,
            1 => TokenizeMode::WordWs,
            other => {
                return Err(NgramError::Format(format!("unknown mode tag {other}")));
            }
        };
        let alpha = binio::read_f64(r).map_err(truncated)?;
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(NgramError::Format("alpha field must be positive".into()));
        }
        let vocab_len = binio::read_u32(r).map_err(truncated)? as usize;
        let mut vocab = Vec::with_capacity(vocab_len + 1);
        vocab.push("<unk>".to_string());
        let mut vocab_index = HashMap::with_capacity(vocab_len);
        for i in 0..vocab_len {
            let surface = binio::read_str(r, 1 << 20).map_err(truncated)?;
            vocab_index.insert(surface.clone(), (i + 1) as u32);
            vocab.push(surface);
        }
        let context_count = binio::read_u64(r).map_err(truncated)?;
        let mut counts = HashMap::with_capacity(context_count as usize);
        for _ in 0..context_count {
            let mut ctx = Vec::with_capacity(order - 1);
            for _ in 0..order - 1 {
                let id = binio::read_u32(r).map_err(truncated)?;
                if id != BOS_ID && id as usize >= vocab.len() {
                    return Err(NgramError::Format(format!("context id {id} out of range")));
                }
                ctx.push(id);
            }
            let total = binio::read_u64(r).map_err(truncated)?;
            let n_conts = binio::read_u32(r).map_err(truncated)?;
            let mut continuations = HashMap::with_capacity(n_conts as usize);
            let mut sum = 0u64;
            for _ in 0..n_conts {
                let id = binio::read_u32(r).map_err(truncated)?;
                if id as usize >= vocab.len() {
                    return Err(NgramError::Format(format!("token id {id} out of range")));
                }
                let count = binio::read_u64(r).map_err(truncated)?;
                sum += count;
                continuations.insert(id, count);
            }
            if sum != total {
                return Err(NgramError::Format(
                    "context total does not match continuation counts".into(),
                ));
            }
            counts.insert(
                ctx.into_boxed_slice(),
                ContextCounts {
                    total,
                    continuations,
                },
            );
        }
        Ok(Self {
            order,
            mode,
            alpha,
            vocab,
            vocab_index,
            counts,
        })
    }
}

fn mode_tag(mode: TokenizeMode) -> u8 {
    match mode {
        TokenizeMode::Char => 0,
        TokenizeMode::WordWs => 1,
    }
}

fn truncated(e: io::Error) -> NgramError {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        NgramError::Format("truncated model file".into())
    } else {
        NgramError::Io(e)
    }
}

/// Perplexity of an explicit per-token probability sequence, the same
/// `exp2(-mean log2 p)` used by [`NgramModel::perplexity`]. Lets callers
/// score probability streams produced elsewhere.
pub fn perplexity_from_probs(probs: &[f64]) -> Result<f64, NgramError> {
    if probs.is_empty() {
        return Err(NgramError::EmptyText);
    }
    let mut log_sum = 0.0f64;
    for &p in probs {
        if !p.is_finite() || p <= 0.0 || p > 1.0 {
            return Err(NgramError::InvalidProbability(p));
        }
        log_sum += p.log2();
    }
    Ok((-log_sum / probs.len() as f64).exp2())
}
