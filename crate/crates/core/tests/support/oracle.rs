//! Independent brute-force scoring oracles. Deliberately different code
//! paths from the library: contexts are joined-string keys in BTreeMaps and
//! perplexity is evaluated in the product domain, one p^(-1/N) factor per
//! token.

use std::collections::{BTreeMap, BTreeSet};

use gauntlet_core::text::{split_sentences, tokenize, TokenizeMode};

const BOS: &str = "\u{10FFFF}BOS";
const UNK: &str = "\u{10FFFF}UNK";

pub struct CountOracle {
    order: usize,
    alpha: f64,
    vocab: BTreeSet<String>,
    counts: BTreeMap<String, (u64, BTreeMap<String, u64>)>,
    mode: TokenizeMode,
}

impl CountOracle {
    pub fn train<S: AsRef<str>>(
        corpus: &[S],
        order: usize,
        alpha: f64,
        mode: TokenizeMode,
    ) -> Self {
        let mut vocab = BTreeSet::new();
        vocab.insert(UNK.to_string());
        let mut counts: BTreeMap<String, (u64, BTreeMap<String, u64>)> = BTreeMap::new();
        for doc in corpus {
            let tokens: Vec<String> = tokenize(doc.as_ref(), mode)
                .surfaces()
                .map(|s| s.to_string())
                .collect();
            if tokens.is_empty() {
                continue;
            }
            for t in &tokens {
                vocab.insert(t.clone());
            }
            let mut seq = vec![BOS.to_string(); order - 1];
            seq.extend(tokens.iter().cloned());
            for i in 0..tokens.len() {
                let key = seq[i..i + order - 1].join("\u{0}");
                let entry = counts.entry(key).or_insert_with(|| (0, BTreeMap::new()));
                entry.0 += 1;
                *entry.1.entry(seq[i + order - 1].clone()).or_insert(0) += 1;
            }
        }
        Self {
            order,
            alpha,
            vocab,
            counts,
            mode,
        }
    }

    fn known(&self, surface: &str) -> String {
        if surface == BOS || self.vocab.contains(surface) {
            surface.to_string()
        } else {
            UNK.to_string()
        }
    }

    pub fn prob(&self, context: &[String], token: &str) -> f64 {
        let token = self.known(token);
        let mapped: Vec<String> = context.iter().map(|c| self.known(c)).collect();
        let key = mapped.join("\u{0}");
        let (total, count) = match self.counts.get(&key) {
            Some((total, continuations)) => {
                (*total, continuations.get(&token).copied().unwrap_or(0))
            }
            None => (0, 0),
        };
        let v = self.vocab.len() as f64;
        (count as f64 + self.alpha) / (total as f64 + self.alpha * v)
    }

    /// Product-domain perplexity: the running product of p_i^(-1/N).
    pub fn perplexity(&self, text: &str) -> f64 {
        let tokens: Vec<String> = tokenize(text, self.mode)
            .surfaces()
            .map(|s| s.to_string())
            .collect();
        assert!(!tokens.is_empty(), "oracle perplexity of empty text");
        let n = tokens.len() as f64;
        let mut seq = vec![BOS.to_string(); self.order - 1];
        seq.extend(tokens.iter().cloned());
        let mut product = 1.0f64;
        for i in 0..tokens.len() {
            let p = self.prob(&seq[i..i + self.order - 1], &seq[i + self.order - 1]);
            product *= p.powf(-1.0 / n);
        }
        product
    }

    /// Two-pass population variance of per-sentence perplexities.
    pub fn burstiness(&self, text: &str) -> f64 {
        let sentence_ppls: Vec<f64> = split_sentences(text)
            .iter()
            .map(|s| self.perplexity(s))
            .collect();
        if sentence_ppls.len() <= 1 {
            return 0.0;
        }
        let mean = sentence_ppls.iter().sum::<f64>() / sentence_ppls.len() as f64;
        let variance = sentence_ppls
            .iter()
            .map(|p| (p - mean) * (p - mean))
            .sum::<f64>()
            / sentence_ppls.len() as f64;
        variance.sqrt()
    }
}
