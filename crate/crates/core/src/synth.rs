//! Deterministic synthetic corpora for desk-scale experiments.
//!
//! Two distributions share one phrase bank, so their *content* is
//! indistinguishable on purpose:
//!
//! * "AI-like" documents are uniformly phrased and typographically clean —
//!   no stray whitespace, every comma tight against its word.
//! * "Human-like" documents are the same text plus one or two small formal
//!   noise events (a space before punctuation, a doubled space, a doubled
//!   letter).
//!
//! Detectors trained on these corpora therefore separate the classes on
//! formal quirks rather than meaning, which is exactly the regime the
//! evaluation harness probes.

use crate::hashing::SmallRng;
use crate::text::comma_positions;

const SUBJECTS: &[&str] = &[
    "The method",
    "The system",
    "The model",
    "The approach",
    "The response",
    "The process",
    "The design",
    "The answer",
];

const VERBS: &[&str] = &[
    "provides",
    "offers",
    "presents",
    "gives",
    "outlines",
    "describes",
    "yields",
    "forms",
];

const ADJECTIVES: &[&str] = &[
    "clear", "simple", "direct", "concise", "steady", "plain", "useful", "neat", "broad", "solid",
];

const NOUNS: &[&str] = &[
    "summary",
    "overview",
    "description",
    "account",
    "answer",
    "picture",
    "outline",
    "guide",
];

const TOPICS: &[&str] = &[
    "topic", "question", "problem", "task", "subject", "idea", "request", "theme",
];

const LINKING: &[&str] = &["remains", "stays", "proves", "looks"];

/// Opening phrase used by a slice of the machine-text distribution.
pub const AI_PREAMBLE: &str = "As an AI language model";

fn sentence(rng: &mut SmallRng) -> String {
    let subject = *rng.pick(SUBJECTS);
    let verb = *rng.pick(VERBS);
    let adj = *rng.pick(ADJECTIVES);
    let adj2 = *rng.pick(ADJECTIVES);
    let noun = *rng.pick(NOUNS);
    let topic = *rng.pick(TOPICS);
    let link = *rng.pick(LINKING);
    match rng.below(8) {
        0 => format!("{subject} {verb} a {adj}, {adj2} {noun} of the {topic}."),
        1 => format!("{subject} {verb} the {noun}, and it {link} {adj} throughout."),
        2 => format!("In practice, the {noun} {link} {adj} for each {topic}."),
        3 => format!("It is {adj}, {adj2}, and easy to follow."),
        4 => format!("{subject} covers the {topic} step by step."),
        5 => format!("As a result, the {noun} {link} {adj} and {adj2}."),
        6 => format!("Overall, this {noun} {verb} a {adj} view of the {topic}."),
        _ => format!("Each part, in turn, adds a {adj} detail to the {noun}."),
    }
}

fn preamble_sentence(rng: &mut SmallRng) -> String {
    let adj = *rng.pick(ADJECTIVES);
    let adj2 = *rng.pick(ADJECTIVES);
    let topic = *rng.pick(TOPICS);
    format!("{AI_PREAMBLE}, I can describe the {topic} in a {adj}, {adj2} way.")
}

/// One clean machine-style document: three to four uniform sentences,
/// always containing at least one comma and no whitespace anomalies.
pub fn ai_document(rng: &mut SmallRng) -> String {
    let with_preamble = rng.chance(0.15);
    ai_document_inner(rng, with_preamble)
}

/// Like [`ai_document`] but guaranteed to begin with the literal
/// "As an AI language model" phrase.
pub fn ai_document_with_preamble(rng: &mut SmallRng) -> String {
    ai_document_inner(rng, true)
}

fn ai_document_inner(rng: &mut SmallRng, with_preamble: bool) -> String {
    loop {
        let n_sentences = 3 + rng.below(2);
        let mut sentences = Vec::with_capacity(n_sentences);
        if with_preamble {
            sentences.push(preamble_sentence(rng));
        }
        while sentences.len() < n_sentences {
            sentences.push(sentence(rng));
        }
        let doc = sentences.join(" ");
        // every document in this corpus carries at least one comma
        if doc.contains(',') {
            return doc;
        }
    }
}

/// One human-style document: a clean document plus one or two small formal
/// noise events.
pub fn human_document(rng: &mut SmallRng) -> String {
    let mut doc = ai_document(rng);
    let events = 1 + usize::from(rng.chance(0.35));
    for _ in 0..events {
        doc = apply_noise(rng, &doc);
    }
    doc
}

fn apply_noise(rng: &mut SmallRng, text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let roll = rng.next_u64() % 100;
    if roll < 45 {
        // space before a comma
        let commas = comma_positions(text);
        if !commas.is_empty() {
            let at = *rng.pick(&commas);
            return insert_at(&chars, at, ' ');
        }
    } else if roll < 65 {
        // space before a sentence terminator
        let stops: Vec<usize> = chars
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c, '.' | '!' | '?'))
            .map(|(i, _)| i)
            .collect();
        if !stops.is_empty() {
            let at = *rng.pick(&stops);
            return insert_at(&chars, at, ' ');
        }
    } else if roll < 85 {
        // doubled space
        let spaces: Vec<usize> = chars
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == ' ')
            .map(|(i, _)| i)
            .collect();
        if !spaces.is_empty() {
            let at = *rng.pick(&spaces);
            return insert_at(&chars, at, ' ');
        }
    } else {
        // doubled letter inside a word
        let letters: Vec<usize> = chars
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_ascii_alphabetic())
            .map(|(i, _)| i)
            .collect();
        if !letters.is_empty() {
            let at = *rng.pick(&letters);
            return insert_at(&chars, at, chars[at]);
        }
    }
    text.to_string()
}

fn insert_at(chars: &[char], at: usize, c: char) -> String {
    let mut out = String::with_capacity(chars.len() + 1);
    out.extend(chars[..at].iter());
    out.push(c);
    out.extend(chars[at..].iter());
    out
}

/// `count` clean machine-style documents from `seed`.
pub fn ai_corpus(count: usize, seed: u64) -> Vec<String> {
    let mut rng = SmallRng::new(seed);
    (0..count).map(|_| ai_document(&mut rng)).collect()
}

/// `count` noisy human-style documents from `seed`.
pub fn human_corpus(count: usize, seed: u64) -> Vec<String> {
    let mut rng = SmallRng::new(seed);
    (0..count).map(|_| human_document(&mut rng)).collect()
}

/// Clean machine-style documents totalling at least `min_bytes` of text.
pub fn clean_training_corpus(min_bytes: usize, seed: u64) -> Vec<String> {
    let mut rng = SmallRng::new(seed);
    let mut docs = Vec::new();
    let mut total = 0usize;
    while total < min_bytes {
        let doc = ai_document(&mut rng);
        total += doc.len();
        docs.push(doc);
    }
    docs
}
