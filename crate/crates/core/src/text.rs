//! Deterministic tokenization, sentence splitting and low-level text
//! utilities shared by every other module.
//!
//! The word-mode tokenizer is deliberately whitespace-aware: an ordinary
//! single space between tokens is implicit, while anything unusual (a space
//! before punctuation, doubled spaces, tabs, leading/trailing runs) becomes
//! an explicit [`TokenKind::AnomSpace`] token. That keeps a "space before a
//! comma" edit visible to the language model instead of being erased the way
//! a split-on-whitespace tokenizer would erase it.

use serde::{Deserialize, Serialize};

/// Provenance label of a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    AiGenerated,
    HumanWritten,
    Unknown,
}

/// One benchmark item's text plus identity and provenance labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    /// The instruction or question the text answers. May be empty.
    pub question: String,
    pub text: String,
    pub origin: Origin,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        question: impl Into<String>,
        text: impl Into<String>,
        origin: Origin,
    ) -> Self {
        Self {
            id: id.into(),
            question: question.into(),
            text: text.into(),
            origin,
        }
    }
}

/// Tokenization mode: per-scalar characters, or whitespace-aware words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizeMode {
    Char,
    WordWs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Word,
    Punct,
    AnomSpace,
    Char,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub kind: TokenKind,
    pub surface: String,
}

impl Token {
    fn new(kind: TokenKind, surface: impl Into<String>) -> Self {
        Self {
            kind,
            surface: surface.into(),
        }
    }
}

/// Tokenized view of a text. Lossless: [`TokenStream::detokenize`] returns
/// the exact source string.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    pub mode: TokenizeMode,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }

    /// Reconstructs the source text. In `WordWs` mode an implicit single
    /// space is restored between a `Word`/`Punct` token and a following
    /// `Word` token; all other whitespace is carried by `AnomSpace` tokens.
    pub fn detokenize(&self) -> String {
        let mut out = String::new();
        for (i, tok) in self.tokens.iter().enumerate() {
            if i > 0 && implicit_gap(&self.tokens[i - 1], tok) {
                out.push(' ');
            }
            out.push_str(&tok.surface);
        }
        out
    }
}

fn implicit_gap(prev: &Token, next: &Token) -> bool {
    matches!(prev.kind, TokenKind::Word | TokenKind::Punct) && next.kind == TokenKind::Word
}

fn is_punct_char(c: char) -> bool {
    c.is_ascii_punctuation()
}

fn is_word_char(c: char) -> bool {
    !c.is_whitespace() && !is_punct_char(c)
}

/// Tokenizes `text` under the given mode.
///
/// `Char` mode emits one token per Unicode scalar value. `WordWs` mode emits
/// `Word` tokens (maximal runs of non-space, non-punctuation scalars),
/// single-scalar `Punct` tokens (ASCII punctuation), and `AnomSpace` tokens
/// for every whitespace run except the ordinary single space that separates
/// a word or punctuation mark from a following word. A zero-length
/// `AnomSpace` marks a punctuation–word junction with no space at all, so
/// that detokenization stays exact for text like `"1,000"`.
pub fn tokenize(text: &str, mode: TokenizeMode) -> TokenStream {
    let tokens = match mode {
        TokenizeMode::Char => text
            .chars()
            .map(|c| Token::new(TokenKind::Char, c.to_string()))
            .collect(),
        TokenizeMode::WordWs => wordws_spans(text)
            .into_iter()
            .map(|(tok, _, _)| tok)
            .collect(),
    };
    TokenStream { tokens, mode }
}

/// WordWs scan yielding each token with its half-open scalar-offset span.
/// Zero-length spans belong to no-gap markers and dropped implicit spaces
/// are not represented at all.
fn wordws_spans(text: &str) -> Vec<(Token, usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let mut out: Vec<(Token, usize, usize)> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            let start = i;
            while i < chars.len() && chars[i].is_whitespace() {
                i += 1;
            }
            let run: String = chars[start..i].iter().collect();
            let after_token = matches!(
                out.last().map(|(t, _, _)| t.kind),
                Some(TokenKind::Word | TokenKind::Punct)
            );
            let next_is_word = i < chars.len() && is_word_char(chars[i]);
            if run == " " && after_token && next_is_word {
                // ordinary separating space: implicit, restored on detokenize
            } else {
                out.push((Token::new(TokenKind::AnomSpace, run), start, i));
            }
        } else if is_punct_char(c) {
            out.push((Token::new(TokenKind::Punct, c.to_string()), i, i + 1));
            if i + 1 < chars.len() && is_word_char(chars[i + 1]) {
                // no-gap marker: suppresses the implicit space that would
                // otherwise be restored between Punct and Word
                out.push((
                    Token::new(TokenKind::AnomSpace, String::new()),
                    i + 1,
                    i + 1,
                ));
            }
            i += 1;
        } else {
            let start = i;
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            out.push((Token::new(TokenKind::Word, word), start, i));
        }
    }
    out
}

/// Half-open scalar-offset spans of the `Word` tokens of `text`.
pub fn word_spans(text: &str) -> Vec<(usize, usize)> {
    wordws_spans(text)
        .into_iter()
        .filter(|(t, _, _)| t.kind == TokenKind::Word)
        .map(|(_, s, e)| (s, e))
        .collect()
}

/// Splits into sentences. A boundary is one of `.` `!` `?` followed by
/// whitespace or end of text; the terminator stays with its sentence and
/// inter-sentence whitespace is consumed. Text without any terminator is a
/// single sentence; empty text yields no sentences.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if matches!(c, '.' | '!' | '?') {
            let end = i + c.len_utf8();
            let at_boundary = match iter.peek() {
                None => true,
                Some((_, next)) => next.is_whitespace(),
            };
            if at_boundary {
                out.push(&text[start..end]);
                while let Some((_, next)) = iter.peek() {
                    if next.is_whitespace() {
                        iter.next();
                    } else {
                        break;
                    }
                }
                start = iter.peek().map(|(j, _)| *j).unwrap_or(text.len());
            }
        }
    }
    if start < text.len() {
        out.push(&text[start..]);
    }
    out
}

/// Ascending scalar offsets of every `,` in `text`.
pub fn comma_positions(text: &str) -> Vec<usize> {
    text.chars()
        .enumerate()
        .filter(|(_, c)| *c == ',')
        .map(|(i, _)| i)
        .collect()
}

/// Levenshtein distance over Unicode scalar values.
pub fn char_diff_count(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Byte offset of the scalar at `char_idx` (or the text length if past the
/// end). Used when splicing edits at scalar offsets into a UTF-8 string.
pub(crate) fn byte_offset(text: &str, char_idx: usize) -> usize {
    text.char_indices()
        .nth(char_idx)
        .map(|(b, _)| b)
        .unwrap_or(text.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kinds_and_surfaces(ts: &TokenStream) -> Vec<(TokenKind, &str)> {
        ts.tokens
            .iter()
            .map(|t| (t.kind, t.surface.as_str()))
            .collect()
    }

    #[test]
    fn wordws_plain_comma() {
        let ts = tokenize("Hello, world", TokenizeMode::WordWs);
        assert_eq!(
            kinds_and_surfaces(&ts),
            vec![
                (TokenKind::Word, "Hello"),
                (TokenKind::Punct, ","),
                (TokenKind::Word, "world"),
            ]
        );
        assert_eq!(ts.detokenize(), "Hello, world");
    }

    #[test]
    fn wordws_space_before_comma_is_anomalous() {
        let ts = tokenize("Hello , world", TokenizeMode::WordWs);
        assert_eq!(
            kinds_and_surfaces(&ts),
            vec![
                (TokenKind::Word, "Hello"),
                (TokenKind::AnomSpace, " "),
                (TokenKind::Punct, ","),
                (TokenKind::Word, "world"),
            ]
        );
        assert_eq!(ts.detokenize(), "Hello , world");
    }

    #[test]
    fn char_mode_emits_single_scalars() {
        let ts = tokenize("ab", TokenizeMode::Char);
        assert_eq!(
            kinds_and_surfaces(&ts),
            vec![(TokenKind::Char, "a"), (TokenKind::Char, "b")]
        );
    }

    #[test]
    fn wordws_tight_punctuation_round_trips() {
        for text in ["a,b", "don't", "1,000, hi", "(x)", "a ,b", "!!", "! !"] {
            let ts = tokenize(text, TokenizeMode::WordWs);
            assert_eq!(ts.detokenize(), text, "round trip failed for {text:?}");
        }
    }

    #[test]
    fn wordws_token_invariants() {
        let ts = tokenize(
            "It said , quite oddly:  \"ok\" — done.",
            TokenizeMode::WordWs,
        );
        for tok in &ts.tokens {
            match tok.kind {
                TokenKind::Word => {
                    assert!(tok
                        .surface
                        .chars()
                        .all(|c| !c.is_whitespace() && !is_punct_char(c)));
                }
                TokenKind::AnomSpace => {
                    assert!(tok.surface.chars().all(char::is_whitespace));
                }
                _ => {}
            }
        }
    }

    #[test]
    fn sentences_split_on_terminator_plus_space() {
        assert_eq!(split_sentences("A cat. A dog."), vec!["A cat.", "A dog."]);
        assert_eq!(split_sentences("no terminator"), vec!["no terminator"]);
        assert_eq!(split_sentences(""), Vec::<&str>::new());
        // a period not followed by whitespace is not a boundary
        assert_eq!(
            split_sentences("v1.2 works! yes"),
            vec!["v1.2 works!", "yes"]
        );
    }

    #[test]
    fn comma_positions_examples() {
        assert_eq!(comma_positions("a,b,c"), vec![1, 3]);
        assert_eq!(comma_positions("no commas"), Vec::<usize>::new());
        assert_eq!(comma_positions(","), vec![0]);
    }

    #[test]
    fn comma_positions_are_scalar_offsets() {
        // é is multi-byte; offsets count scalars, not bytes
        assert_eq!(comma_positions("é,b"), vec![1]);
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(char_diff_count("abc", "abc"), 0);
        assert_eq!(char_diff_count("charge,", "charge ,"), 1);
        assert_eq!(char_diff_count("kitten", "sitting"), 3);
    }

    /// Full-matrix reference implementation used as the oracle.
    #[allow(clippy::needless_range_loop)]
    fn levenshtein_oracle(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut m = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for i in 0..=a.len() {
            m[i][0] = i;
        }
        for j in 0..=b.len() {
            m[0][j] = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let cost = usize::from(a[i - 1] != b[j - 1]);
                m[i][j] = (m[i - 1][j] + 1)
                    .min(m[i][j - 1] + 1)
                    .min(m[i - 1][j - 1] + cost);
            }
        }
        m[a.len()][b.len()]
    }

    proptest! {
        #[test]
        fn round_trip_wordws(text in "[ -~\\té—]{0,60}") {
            let ts = tokenize(&text, TokenizeMode::WordWs);
            prop_assert_eq!(ts.detokenize(), text);
        }

        #[test]
        fn round_trip_char(text in ".{0,60}") {
            let ts = tokenize(&text, TokenizeMode::Char);
            prop_assert_eq!(ts.detokenize(), text);
        }

        #[test]
        fn nonempty_text_has_tokens(text in ".{1,40}") {
            prop_assert!(!tokenize(&text, TokenizeMode::Char).is_empty());
            prop_assert!(!tokenize(&text, TokenizeMode::WordWs).is_empty());
        }

        #[test]
        fn comma_positions_count_and_index(text in "[a-z, ]{0,50}") {
            let offsets = comma_positions(&text);
            let k = text.chars().filter(|c| *c == ',').count();
            prop_assert_eq!(offsets.len(), k);
            let chars: Vec<char> = text.chars().collect();
            for off in offsets {
                prop_assert_eq!(chars[off], ',');
            }
        }

        #[test]
        fn levenshtein_matches_oracle(a in "[a-cé]{0,8}", b in "[a-cé]{0,8}") {
            prop_assert_eq!(char_diff_count(&a, &b), levenshtein_oracle(&a, &b));
        }
    }
}
