//! Test bench for AI-generated-text detectors.
//!
//! The crate bundles everything needed to measure how fragile text
//! detectors are against single-character edits and prompt-side style
//! shifts:
//!
//! * [`text`] — lossless tokenization, sentence splitting, edit distance
//! * [`ngram`] — smoothed n-gram language model, perplexity, burstiness
//! * [`detect`] — perplexity-threshold, classifier and remote detectors
//!   behind one [`detect::Detector`] interface
//! * [`perturb`] — the space-before-comma edit, its variants, and prompt
//!   templates for generation-side strategies
//! * [`gateway`] — chat-completion client with retrying and a response
//!   cache for reproducible experiments
//! * [`harness`] — benchmark loading, the evasion-rate metric, the
//!   strategy × detector matrix and the normalization defense
//! * [`synth`] — deterministic synthetic corpora for desk-scale runs
//!
//! The `gauntlet` binary wires these into train/perturb/detect/eval
//! subcommands; see the repository README for a walkthrough.

mod binio;
mod sync;

pub mod config;
pub mod corpus;
pub mod detect;
pub mod gateway;
pub mod harness;
pub mod hashing;
pub mod ngram;
pub mod perturb;
pub mod synth;
pub mod text;

pub use detect::{DetectionResult, Detector, Verdict};
pub use ngram::NgramModel;
pub use perturb::Strategy;
pub use text::{Document, Origin, TokenizeMode};
