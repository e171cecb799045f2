//! Pluggable similarity scorers.
//!
//! Every scorer maps a pair of strings to `[0, 1]` with `s(x, x) = 1` for
//! nonempty `x`. Two empty strings score 1.0; an empty string against a
//! nonempty one scores 0.0. The lexical scorers are symmetric and pure; the
//! remote scorer delegates to an embedding service and takes cosine.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::ScorerError;
use crate::services::{EmbeddingClient, RetryPolicy};
use crate::text::tokenize::tokenize;

pub const DEFAULT_NGRAM_N: usize = 3;

/// Choice and parameters of a similarity function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScorerSpec {
    /// Multiset Jaccard over normalized tokens.
    BagJaccard,
    /// Cosine of character n-gram count vectors.
    CharNgramCosine {
        #[serde(default = "default_ngram_n")]
        ngram_n: usize,
    },
    /// 1 minus normalized edit distance over codepoints.
    Levenshtein,
    /// Cosine of vectors returned by an embedding service, clamped to [0, 1].
    RemoteEmbedding { endpoint: String },
}

fn default_ngram_n() -> usize {
    DEFAULT_NGRAM_N
}

impl Default for ScorerSpec {
    /// Character trigram cosine: robust where token-exact matching fails
    /// on inflectional morphology.
    fn default() -> Self {
        ScorerSpec::CharNgramCosine {
            ngram_n: DEFAULT_NGRAM_N,
        }
    }
}

impl ScorerSpec {
    pub fn is_remote(&self) -> bool {
        matches!(self, ScorerSpec::RemoteEmbedding { .. })
    }

    /// Builds a callable scorer. Remote scorers get a shared HTTP client
    /// with the default retry policy.
    pub fn build(&self) -> Result<Box<dyn Scorer>, ScorerError> {
        match self {
            ScorerSpec::BagJaccard => Ok(Box::new(BagJaccard)),
            ScorerSpec::CharNgramCosine { ngram_n } => {
                if *ngram_n == 0 {
                    return Err(ScorerError::InvalidSpec(
                        "ngram_n must be at least 1".into(),
                    ));
                }
                Ok(Box::new(CharNgramCosine { n: *ngram_n }))
            }
            ScorerSpec::Levenshtein => Ok(Box::new(LevenshteinScorer)),
            ScorerSpec::RemoteEmbedding { endpoint } => Ok(Box::new(RemoteEmbeddingScorer::new(
                EmbeddingClient::new(endpoint.clone(), RetryPolicy::default()),
            ))),
        }
    }
}

/// Similarity function over string pairs, safe to share across workers.
pub trait Scorer: Send + Sync {
    fn score(&self, a: &str, b: &str) -> Result<f64, ScorerError>;
}

/// Scores `a` against `b` under `spec`. Convenience wrapper over
/// [`ScorerSpec::build`] for one-off comparisons.
pub fn similarity(spec: &ScorerSpec, a: &str, b: &str) -> Result<f64, ScorerError> {
    spec.build()?.score(a, b)
}

struct BagJaccard;

impl Scorer for BagJaccard {
    fn score(&self, a: &str, b: &str) -> Result<f64, ScorerError> {
        Ok(bag_jaccard(a, b))
    }
}

struct CharNgramCosine {
    n: usize,
}

impl Scorer for CharNgramCosine {
    fn score(&self, a: &str, b: &str) -> Result<f64, ScorerError> {
        Ok(char_ngram_cosine(a, b, self.n))
    }
}

struct LevenshteinScorer;

impl Scorer for LevenshteinScorer {
    fn score(&self, a: &str, b: &str) -> Result<f64, ScorerError> {
        Ok(levenshtein_similarity(a, b))
    }
}

/// Remote scorer: embeds both texts in one batch and takes clamped cosine.
pub struct RemoteEmbeddingScorer {
    client: EmbeddingClient,
}

impl RemoteEmbeddingScorer {
    pub fn new(client: EmbeddingClient) -> Self {
        Self { client }
    }
}

impl Scorer for RemoteEmbeddingScorer {
    fn score(&self, a: &str, b: &str) -> Result<f64, ScorerError> {
        if a.is_empty() && b.is_empty() {
            return Ok(1.0);
        }
        if a.is_empty() || b.is_empty() {
            return Ok(0.0);
        }
        let vectors = self
            .client
            .embed_batch(&[a.to_owned(), b.to_owned()])
            .map_err(|e| ScorerError::RemoteUnavailable(e.to_string()))?;
        Ok(cosine(&vectors[0], &vectors[1]).clamp(0.0, 1.0))
    }
}

/// Multiset Jaccard over normalized tokens: sum of per-token minimum counts
/// over sum of per-token maximum counts. Tokens that normalize to the empty
/// string (pure punctuation) are ignored.
pub fn bag_jaccard(a: &str, b: &str) -> f64 {
    let bag_a = token_bag(a);
    let bag_b = token_bag(b);
    if bag_a.is_empty() && bag_b.is_empty() {
        return 1.0;
    }
    let mut intersection = 0usize;
    let mut union = 0usize;
    for (tok, &ca) in &bag_a {
        let cb = bag_b.get(tok).copied().unwrap_or(0);
        intersection += ca.min(cb);
        union += ca.max(cb);
    }
    for (tok, &cb) in &bag_b {
        if !bag_a.contains_key(tok) {
            union += cb;
        }
    }
    if union == 0 {
        0.0
    } else {
        intersection as f64 / union as f64
    }
}

fn token_bag(text: &str) -> HashMap<String, usize> {
    let mut bag = HashMap::new();
    for tok in tokenize(text).tokens() {
        if !tok.normalized.is_empty() {
            *bag.entry(tok.normalized.clone()).or_insert(0) += 1;
        }
    }
    bag
}

/// Cosine of character n-gram count vectors of the whitespace-collapsed,
/// case-folded strings. A string shorter than `n` contributes itself as a
/// single gram.
pub fn char_ngram_cosine(a: &str, b: &str, n: usize) -> f64 {
    let fa = collapse_fold(a);
    let fb = collapse_fold(b);
    if fa == fb {
        // covers empty-vs-empty and keeps s(x, x) exactly 1.0
        return 1.0;
    }
    if fa.is_empty() || fb.is_empty() {
        return 0.0;
    }
    let ga = ngram_counts(&fa, n);
    let gb = ngram_counts(&fb, n);
    let mut dot = 0.0f64;
    for (gram, &ca) in &ga {
        if let Some(&cb) = gb.get(gram) {
            dot += ca as f64 * cb as f64;
        }
    }
    let norm_a: f64 = ga.values().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
    let norm_b: f64 = gb.values().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
    if norm_a == 0.0 || norm_b == 0.0 {
        0.0
    } else {
        (dot / (norm_a * norm_b)).min(1.0)
    }
}

fn collapse_fold(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn ngram_counts(s: &str, n: usize) -> HashMap<Vec<char>, usize> {
    let chars: Vec<char> = s.chars().collect();
    let mut counts = HashMap::new();
    if chars.len() < n {
        *counts.entry(chars).or_insert(0) += 1;
        return counts;
    }
    for window in chars.windows(n) {
        *counts.entry(window.to_vec()).or_insert(0) += 1;
    }
    counts
}

/// `1 - editdistance(a, b) / max(|a|, |b|)` over codepoints; 1.0 for two
/// empty strings.
pub fn levenshtein_similarity(a: &str, b: &str) -> f64 {
    let ca: Vec<char> = a.chars().collect();
    let cb: Vec<char> = b.chars().collect();
    let max_len = ca.len().max(cb.len());
    if max_len == 0 {
        return 1.0;
    }
    1.0 - levenshtein_distance(&ca, &cb) as f64 / max_len as f64
}

fn levenshtein_distance(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ch_a) in a.iter().enumerate() {
        let mut prev_diag = row[0];
        row[0] = i + 1;
        for (j, &ch_b) in b.iter().enumerate() {
            let cost = usize::from(ch_a != ch_b);
            let next = (row[j + 1] + 1).min(row[j] + 1).min(prev_diag + cost);
            prev_diag = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[b.len()]
}

/// Cosine of two equal-dimension vectors; 0.0 when either has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bag_jaccard_fox_answers() {
        // min-count intersection 3, max-count union 5
        let s = bag_jaccard("chased the fox through", "persuaded the fox through");
        assert!((s - 0.6).abs() < 1e-12);
    }

    #[test]
    fn bag_jaccard_counts_duplicates() {
        // "the the fox" vs "the fox": inter = min(2,1)+1 = 2, union = max(2,1)+1 = 3
        let s = bag_jaccard("the the fox", "the fox");
        assert!((s - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn levenshtein_kitten_sitting() {
        let s = levenshtein_similarity("kitten", "sitting");
        assert!((s - (1.0 - 3.0 / 7.0)).abs() < 1e-12);
    }

    #[test]
    fn trigram_cosine_disjoint_grams() {
        assert_eq!(char_ngram_cosine("abc", "abd", 3), 0.0);
    }

    #[test]
    fn trigram_cosine_short_strings_are_single_grams() {
        assert!((char_ngram_cosine("ab", "ab", 3) - 1.0).abs() < 1e-12);
        assert_eq!(char_ngram_cosine("ab", "cd", 3), 0.0);
    }

    #[test]
    fn empty_conventions() {
        for spec in [
            ScorerSpec::BagJaccard,
            ScorerSpec::CharNgramCosine { ngram_n: 3 },
            ScorerSpec::Levenshtein,
        ] {
            assert_eq!(similarity(&spec, "", "").unwrap(), 1.0);
            assert_eq!(similarity(&spec, "", "x y").unwrap(), 0.0);
            assert_eq!(similarity(&spec, "x y", "").unwrap(), 0.0);
        }
    }

    #[test]
    fn self_similarity_is_one() {
        for spec in [
            ScorerSpec::BagJaccard,
            ScorerSpec::CharNgramCosine { ngram_n: 3 },
            ScorerSpec::Levenshtein,
        ] {
            assert_eq!(similarity(&spec, "x y z", "x y z").unwrap(), 1.0);
        }
    }

    #[test]
    fn ngram_n_zero_rejected() {
        assert!(ScorerSpec::CharNgramCosine { ngram_n: 0 }.build().is_err());
    }

    #[test]
    fn whitespace_collapse_in_ngram_scorer() {
        assert!((char_ngram_cosine("a  b\tc", "a b c", 3) - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn lexical_scorers_range_and_symmetry(a in "\\PC{0,30}", b in "\\PC{0,30}") {
            for spec in [
                ScorerSpec::BagJaccard,
                ScorerSpec::CharNgramCosine { ngram_n: 3 },
                ScorerSpec::Levenshtein,
            ] {
                let ab = similarity(&spec, &a, &b).unwrap();
                let ba = similarity(&spec, &b, &a).unwrap();
                prop_assert!((0.0..=1.0).contains(&ab), "{ab} out of range");
                prop_assert!((ab - ba).abs() < 1e-12, "asymmetric: {ab} vs {ba}");
            }
        }

        #[test]
        fn lexical_self_similarity(a in "\\PC{1,30}") {
            prop_assert_eq!(similarity(&ScorerSpec::Levenshtein, &a, &a).unwrap(), 1.0);
            prop_assert_eq!(similarity(&ScorerSpec::BagJaccard, &a, &a).unwrap(), 1.0);
            prop_assert_eq!(
                similarity(&ScorerSpec::CharNgramCosine { ngram_n: 3 }, &a, &a).unwrap(),
                1.0
            );
        }

        // Levenshtein similarity hits 1 exactly when the strings are equal.
        #[test]
        fn levenshtein_one_iff_equal(a in "\\PC{0,20}", b in "\\PC{0,20}") {
            let s = levenshtein_similarity(&a, &b);
            let eq = a.chars().eq(b.chars());
            prop_assert_eq!(s == 1.0, eq);
        }
    }
}
