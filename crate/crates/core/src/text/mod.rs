//! Tokenization with exact offset maps and pluggable similarity scorers.

pub mod scorer;
pub mod tokenize;

pub use scorer::{
    bag_jaccard, char_ngram_cosine, cosine, levenshtein_similarity, similarity, Scorer,
    ScorerSpec, DEFAULT_NGRAM_N,
};
pub use tokenize::{
    char_span_of_tokens, codepoint_len, codepoint_slice, codepoint_to_byte, normalize_token,
    tokenize, Token, TokenSequence,
};
