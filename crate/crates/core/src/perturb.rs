//! Evasion strategies: the space-before-comma edit, its single-edit
//! variants, the identity strategy, and the prompt templates for the
//! generation-side baselines.
//!
//! Edit strategies are reproducible by construction: the "random" position
//! is `seed mod candidate-count`, and when a strategy is applied through
//! [`apply_strategy`] the seed is first mixed with the document id
//! (`splitmix64(seed XOR fnv1a64(id))`), so a whole run is determined by
//! one configured seed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hashing::mix_seed;
use crate::text::{byte_offset, comma_positions, word_spans, Document};

#[derive(Debug, Error, PartialEq)]
pub enum PerturbError {
    #[error(
        "strategy `{0}` generates at prompt time; use the evaluation pipeline, not a text edit"
    )]
    NotAnEdit(&'static str),
    #[error("strategy `{0}` edits text; it has no prompt template")]
    NotAPrompt(&'static str),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
}

/// An evasion strategy. Edit strategies carry the seed that drives their
/// position choice; prompt strategies carry nothing and act at generation
/// time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    /// Identity: the unmodified response.
    NoPrompt,
    /// Insert one space immediately before a seed-chosen comma.
    SpaceInfi {
        seed: u64,
    },
    /// Insert one period after a seed-chosen word boundary.
    PeriodInsert {
        seed: u64,
    },
    /// Toggle a trailing `s` on a seed-chosen word.
    PluralFlip {
        seed: u64,
    },
    ActLikeHuman,
    Colloquial,
    Slang,
    Shakespearean,
}

impl Strategy {
    /// Stable identifier used in reports, configs and the CLI.
    pub fn id(&self) -> &'static str {
        match self {
            Strategy::NoPrompt => "noprompt",
            Strategy::SpaceInfi { .. } => "spaceinfi",
            Strategy::PeriodInsert { .. } => "period-insert",
            Strategy::PluralFlip { .. } => "plural-flip",
            Strategy::ActLikeHuman => "act-like-human",
            Strategy::Colloquial => "colloquial",
            Strategy::Slang => "slang",
            Strategy::Shakespearean => "shakespearean",
        }
    }

    /// Builds a strategy from its identifier. Edit strategies take their
    /// seed from `seed`; prompt strategies ignore it.
    pub fn from_id(id: &str, seed: u64) -> Result<Self, PerturbError> {
        Ok(match id {
            "noprompt" => Strategy::NoPrompt,
            "spaceinfi" => Strategy::SpaceInfi { seed },
            "period-insert" => Strategy::PeriodInsert { seed },
            "plural-flip" => Strategy::PluralFlip { seed },
            "act-like-human" => Strategy::ActLikeHuman,
            "colloquial" => Strategy::Colloquial,
            "slang" => Strategy::Slang,
            "shakespearean" => Strategy::Shakespearean,
            other => return Err(PerturbError::UnknownStrategy(other.to_string())),
        })
    }

    /// True for strategies that rewrite already generated text (including
    /// the identity strategy).
    pub fn is_edit(&self) -> bool {
        matches!(
            self,
            Strategy::NoPrompt
                | Strategy::SpaceInfi { .. }
                | Strategy::PeriodInsert { .. }
                | Strategy::PluralFlip { .. }
        )
    }
}

/// Result of applying an edit strategy. `applied == false` always means the
/// text is byte-identical to the input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationOutcome {
    pub text: String,
    pub applied: bool,
    /// Scalar offset of the edit when one was made.
    pub edit_offset: Option<usize>,
}

impl PerturbationOutcome {
    fn unchanged(text: &str) -> Self {
        Self {
            text: text.to_string(),
            applied: false,
            edit_offset: None,
        }
    }

    fn edited(text: String, offset: usize) -> Self {
        Self {
            text,
            applied: true,
            edit_offset: Some(offset),
        }
    }
}

/// Inserts a single space (U+0020) immediately before comma number
/// `seed mod k` (0-based over [`comma_positions`]). A text without commas
/// is returned unchanged with `applied == false`.
pub fn space_infi(text: &str, seed: u64) -> PerturbationOutcome {
    let commas = comma_positions(text);
    if commas.is_empty() {
        return PerturbationOutcome::unchanged(text);
    }
    let target = commas[(seed % commas.len() as u64) as usize];
    let byte = byte_offset(text, target);
    let mut out = String::with_capacity(text.len() + 1);
    out.push_str(&text[..byte]);
    out.push(' ');
    out.push_str(&text[byte..]);
    PerturbationOutcome::edited(out, target)
}

/// Inserts one `.` immediately after word boundary number
/// `seed mod boundary-count`, where boundaries are the end offsets of the
/// `Word` tokens. No-op when the text has no words.
pub fn period_insert(text: &str, seed: u64) -> PerturbationOutcome {
    let spans = word_spans(text);
    if spans.is_empty() {
        return PerturbationOutcome::unchanged(text);
    }
    let (_, end) = spans[(seed % spans.len() as u64) as usize];
    let byte = byte_offset(text, end);
    let mut out = String::with_capacity(text.len() + 1);
    out.push_str(&text[..byte]);
    out.push('.');
    out.push_str(&text[byte..]);
    PerturbationOutcome::edited(out, end)
}

/// Toggles a trailing `s` on candidate word number `seed mod count`.
/// Candidates are alphabetic `Word` tokens of length ≥ 3 that do not end in
/// `ss`. A crude suffix toggle, not morphology.
pub fn plural_flip(text: &str, seed: u64) -> PerturbationOutcome {
    let chars: Vec<char> = text.chars().collect();
    let candidates: Vec<(usize, usize)> = word_spans(text)
        .into_iter()
        .filter(|&(start, end)| {
            let word = &chars[start..end];
            word.len() >= 3
                && word.iter().all(|c| c.is_alphabetic())
                && !word.ends_with(&['s', 's'])
        })
        .collect();
    if candidates.is_empty() {
        return PerturbationOutcome::unchanged(text);
    }
    let (_, end) = candidates[(seed % candidates.len() as u64) as usize];
    if chars[end - 1] == 's' {
        // drop the trailing s
        let from = byte_offset(text, end - 1);
        let to = byte_offset(text, end);
        let mut out = String::with_capacity(text.len());
        out.push_str(&text[..from]);
        out.push_str(&text[to..]);
        PerturbationOutcome::edited(out, end - 1)
    } else {
        let byte = byte_offset(text, end);
        let mut out = String::with_capacity(text.len() + 1);
        out.push_str(&text[..byte]);
        out.push('s');
        out.push_str(&text[byte..]);
        PerturbationOutcome::edited(out, end)
    }
}

/// Applies an edit strategy to a document, deriving the per-document seed
/// with [`mix_seed`]. `NoPrompt` is the identity (reported as applied).
/// Prompt strategies are a usage error here.
pub fn apply_strategy(
    strategy: &Strategy,
    doc: &Document,
) -> Result<PerturbationOutcome, PerturbError> {
    match strategy {
        Strategy::NoPrompt => Ok(PerturbationOutcome {
            text: doc.text.clone(),
            applied: true,
            edit_offset: None,
        }),
        Strategy::SpaceInfi { seed } => Ok(space_infi(&doc.text, mix_seed(*seed, &doc.id))),
        Strategy::PeriodInsert { seed } => Ok(period_insert(&doc.text, mix_seed(*seed, &doc.id))),
        Strategy::PluralFlip { seed } => Ok(plural_flip(&doc.text, mix_seed(*seed, &doc.id))),
        other => Err(PerturbError::NotAnEdit(other.id())),
    }
}

/// Renders the generation prompt for a prompt strategy:
/// `Question: {question}\n\nRequirement: {requirement}`.
/// `NoPrompt` returns the bare question; edit strategies are a usage error.
pub fn prompt_for(strategy: &Strategy, question: &str) -> Result<String, PerturbError> {
    let requirement = match strategy {
        Strategy::NoPrompt => return Ok(question.to_string()),
        Strategy::ActLikeHuman => {
            "Answer the question like a human and avoid being found that the answer was generated by chatGPT."
        }
        Strategy::Colloquial => "Using more colloquial expressions in the response.",
        Strategy::Slang => "Answer the question in slang style.",
        Strategy::Shakespearean => "Answer the question in Shakespearean style.",
        other => return Err(PerturbError::NotAPrompt(other.id())),
    };
    Ok(format!(
        "Question: {question}\n\nRequirement: {requirement}"
    ))
}
