//! Whitespace tokenization with exact codepoint-offset maps.
//!
//! Offsets are Unicode codepoint indices into the source text, not byte
//! indices. Downstream consumers (span alignment, SQuAD serialization)
//! rely on `source[char_start..char_end] == raw` holding codepoint-exact.

use serde::{Deserialize, Serialize};

use crate::error::TextError;

/// One whitespace-delimited token with its span in the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// Verbatim slice of the source text.
    pub raw: String,
    /// Raw token with leading/trailing punctuation stripped and case folded.
    /// Used only for similarity scoring, never for offsets or replacement.
    pub normalized: String,
    /// Codepoint offset of the first character, inclusive.
    pub char_start: usize,
    /// Codepoint offset one past the last character, exclusive.
    pub char_end: usize,
}

/// Tokens of a text plus the text they were cut from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    source: String,
    tokens: Vec<Token>,
}

impl TokenSequence {
    pub fn source_text(&self) -> &str {
        &self.source
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Raw substring covered by tokens `[token_start, token_end)`, including
    /// any interior whitespace and punctuation.
    pub fn window_text(&self, token_start: usize, token_end: usize) -> Result<&str, TextError> {
        let (cs, ce) = char_span_of_tokens(self, token_start, token_end)?;
        // Token spans were derived from this source, so the slice exists.
        Ok(codepoint_slice(&self.source, cs, ce).expect("token span within source"))
    }
}

/// Splits `text` on Unicode whitespace; every maximal non-whitespace run
/// becomes one token. Empty or all-whitespace input yields an empty sequence.
pub fn tokenize(text: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    let mut start_cp = 0usize;
    let mut start_byte = 0usize;
    let mut in_token = false;

    for (cp_idx, (byte_idx, ch)) in text.char_indices().enumerate() {
        if ch.is_whitespace() {
            if in_token {
                push_token(&mut tokens, text, start_byte, byte_idx, start_cp, cp_idx);
                in_token = false;
            }
        } else if !in_token {
            start_cp = cp_idx;
            start_byte = byte_idx;
            in_token = true;
        }
    }
    if in_token {
        let total_cp = text.chars().count();
        push_token(&mut tokens, text, start_byte, text.len(), start_cp, total_cp);
    }

    TokenSequence {
        source: text.to_owned(),
        tokens,
    }
}

fn push_token(
    tokens: &mut Vec<Token>,
    text: &str,
    start_byte: usize,
    end_byte: usize,
    start_cp: usize,
    end_cp: usize,
) {
    let raw = &text[start_byte..end_byte];
    tokens.push(Token {
        raw: raw.to_owned(),
        normalized: normalize_token(raw),
        char_start: start_cp,
        char_end: end_cp,
    });
}

/// Strips leading/trailing non-alphanumeric characters and lowercases.
/// A token that is pure punctuation normalizes to the empty string.
pub fn normalize_token(raw: &str) -> String {
    raw.trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

/// Maps a half-open token range to its covering codepoint span:
/// `(tokens[token_start].char_start, tokens[token_end-1].char_end)`.
pub fn char_span_of_tokens(
    seq: &TokenSequence,
    token_start: usize,
    token_end: usize,
) -> Result<(usize, usize), TextError> {
    if token_start >= token_end || token_end > seq.tokens.len() {
        return Err(TextError::TokenRange {
            token_start,
            token_end,
            len: seq.tokens.len(),
        });
    }
    Ok((
        seq.tokens[token_start].char_start,
        seq.tokens[token_end - 1].char_end,
    ))
}

/// Number of Unicode codepoints in `s`.
pub fn codepoint_len(s: &str) -> usize {
    s.chars().count()
}

/// Slice of `s` covering codepoints `[start, end)`, or `None` when the range
/// is out of bounds or inverted.
pub fn codepoint_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let start_byte = codepoint_to_byte(s, start)?;
    let end_byte = codepoint_to_byte(s, end)?;
    Some(&s[start_byte..end_byte])
}

/// Byte offset of codepoint index `cp` in `s`; `cp == len` maps to `s.len()`.
pub fn codepoint_to_byte(s: &str, cp: usize) -> Option<usize> {
    let mut count = 0usize;
    for (byte_idx, _) in s.char_indices() {
        if count == cp {
            return Some(byte_idx);
        }
        count += 1;
    }
    if cp == count {
        Some(s.len())
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn four_word_sentence_spans() {
        let seq = tokenize("The quick brown fox");
        let spans: Vec<(usize, usize)> = seq
            .tokens()
            .iter()
            .map(|t| (t.char_start, t.char_end))
            .collect();
        assert_eq!(spans, vec![(0, 3), (4, 9), (10, 15), (16, 19)]);
        assert_eq!(seq.tokens()[3].raw, "fox");
    }

    #[test]
    fn punctuation_stripped_in_normalized_only() {
        let seq = tokenize("dog.");
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.tokens()[0].raw, "dog.");
        assert_eq!(seq.tokens()[0].normalized, "dog");
    }

    #[test]
    fn empty_and_whitespace_inputs() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" \t\n ").is_empty());
    }

    #[test]
    fn devanagari_offsets_are_codepoints() {
        // "दिल्ली" is 6 codepoints but 18 bytes.
        let seq = tokenize("नई दिल्ली");
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.tokens()[0].char_start, 0);
        assert_eq!(seq.tokens()[0].char_end, 2);
        assert_eq!(seq.tokens()[1].char_start, 3);
        assert_eq!(seq.tokens()[1].char_end, 9);
        assert_eq!(codepoint_slice("नई दिल्ली", 3, 9), Some("दिल्ली"));
    }

    #[test]
    fn devanagari_danda_stripped() {
        let seq = tokenize("दिल्ली।");
        assert_eq!(seq.tokens()[0].normalized, "दिल्ली");
    }

    #[test]
    fn char_span_of_token_range() {
        let seq = tokenize("The quick brown fox");
        assert_eq!(char_span_of_tokens(&seq, 1, 3).unwrap(), (4, 15));
        assert_eq!(seq.window_text(1, 3).unwrap(), "quick brown");
        assert_eq!(char_span_of_tokens(&seq, 0, 1).unwrap(), (0, 3));
    }

    #[test]
    fn char_span_rejects_out_of_range() {
        let seq = tokenize("a b");
        assert!(char_span_of_tokens(&seq, 0, 3).is_err());
        assert!(char_span_of_tokens(&seq, 1, 1).is_err());
    }

    #[test]
    fn codepoint_helpers() {
        assert_eq!(codepoint_len("दिल्ली"), 6);
        assert_eq!(codepoint_slice("abc", 0, 3), Some("abc"));
        assert_eq!(codepoint_slice("abc", 1, 2), Some("b"));
        assert_eq!(codepoint_slice("abc", 2, 5), None);
        assert_eq!(codepoint_to_byte("abc", 3), Some(3));
        assert_eq!(codepoint_to_byte("", 0), Some(0));
    }

    proptest! {
        // Every token is the verbatim slice of its span.
        #[test]
        fn token_spans_reslice_to_raw(text in "\\PC{0,80}") {
            let seq = tokenize(&text);
            for tok in seq.tokens() {
                let sliced = codepoint_slice(&text, tok.char_start, tok.char_end);
                prop_assert_eq!(sliced, Some(tok.raw.as_str()));
            }
        }

        // Spans are strictly increasing and non-overlapping.
        #[test]
        fn token_spans_monotone(text in "\\PC{0,80}") {
            let seq = tokenize(&text);
            for pair in seq.tokens().windows(2) {
                prop_assert!(pair[0].char_end <= pair[1].char_start);
                prop_assert!(pair[0].char_start < pair[0].char_end);
            }
        }

        // Re-tokenizing the raws joined by single spaces yields the same raws.
        #[test]
        fn idempotent_up_to_span_renumbering(text in "\\PC{0,80}") {
            let seq = tokenize(&text);
            let raws: Vec<&str> = seq.tokens().iter().map(|t| t.raw.as_str()).collect();
            let rejoined = raws.join(" ");
            let again = tokenize(&rejoined);
            let raws2: Vec<&str> = again.tokens().iter().map(|t| t.raw.as_str()).collect();
            prop_assert_eq!(raws, raws2);
        }
    }
}
