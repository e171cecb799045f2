//! Two-pass sliding-window answer localization.
//!
//! Finds the span of a translated context most similar to a translated
//! answer: a coarse scan strides non-overlapping answer-sized windows over
//! the context, the best window is merged with its neighbors, and a stride-1
//! fine scan over the merged region picks the final window. The window text
//! of the winner becomes the replacement answer, so emitted spans are always
//! verbatim context slices.
//!
//! Window rule shared by every pass: a window starts at a stride offset and
//! spans up to `w` tokens, truncated at the scan boundary. Truncated tail
//! windows are scored like any other candidate; this keeps every coarse
//! window reachable by the fine pass, which in turn guarantees the fine
//! score never falls below the coarse score.

use serde::{Deserialize, Serialize};

use crate::error::ScorerError;
use crate::text::scorer::{Scorer, ScorerSpec};
use crate::text::tokenize::{char_span_of_tokens, codepoint_slice, tokenize, TokenSequence};

pub const DEFAULT_LOW_CONFIDENCE_THRESHOLD: f64 = 0.35;

/// Scorer choice plus the score below which a result is flagged
/// low-confidence. Ties always break to the earliest window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignerConfig {
    pub scorer: ScorerSpec,
    #[serde(default = "default_threshold")]
    pub low_confidence_threshold: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_LOW_CONFIDENCE_THRESHOLD
}

impl Default for AlignerConfig {
    fn default() -> Self {
        Self {
            scorer: ScorerSpec::default(),
            low_confidence_threshold: DEFAULT_LOW_CONFIDENCE_THRESHOLD,
        }
    }
}

impl AlignerConfig {
    pub fn validate(&self) -> Result<(), ScorerError> {
        if !(0.0..=1.0).contains(&self.low_confidence_threshold) {
            return Err(ScorerError::InvalidSpec(format!(
                "low_confidence_threshold must lie in [0, 1], got {}",
                self.low_confidence_threshold
            )));
        }
        Ok(())
    }
}

/// Outcome class of one alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentStatus {
    Ok,
    LowConfidence,
    Failed,
}

/// Final span (codepoints and tokens, both half-open), the verbatim context
/// slice that replaces the answer, and the winning similarity score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub char_start: usize,
    pub char_end: usize,
    pub token_start: usize,
    pub token_end: usize,
    pub replaced_answer: String,
    pub score: f64,
    pub flag: AlignmentStatus,
}

impl AlignmentResult {
    fn failed() -> Self {
        Self {
            char_start: 0,
            char_end: 0,
            token_start: 0,
            token_end: 0,
            replaced_answer: String::new(),
            score: 0.0,
            flag: AlignmentStatus::Failed,
        }
    }
}

/// A built aligner: scorer plus threshold, shareable across workers.
pub struct Aligner {
    scorer: Box<dyn Scorer>,
    threshold: f64,
}

impl Aligner {
    pub fn from_config(cfg: &AlignerConfig) -> Result<Self, ScorerError> {
        cfg.validate()?;
        Ok(Self {
            scorer: cfg.scorer.build()?,
            threshold: cfg.low_confidence_threshold,
        })
    }

    /// Coarse scan, neighbor merge, then stride-1 fine scan. The window
    /// size is the token count of the translated answer. An empty context
    /// or an answer with no tokens yields a `Failed` result with a zeroed
    /// span.
    pub fn align(&self, context: &str, translated_answer: &str) -> Result<AlignmentResult, ScorerError> {
        let ctx = tokenize(context);
        let w = tokenize(translated_answer).len();
        if ctx.is_empty() || w == 0 {
            return Ok(AlignmentResult::failed());
        }
        let (coarse_start, _) = coarse_scan(&ctx, translated_answer, w, self.scorer.as_ref())?;
        let region = merge_region(ctx.len(), coarse_start, w);
        let (start, score) = fine_scan(&ctx, region, translated_answer, w, self.scorer.as_ref())?;
        self.assemble(&ctx, context, start, region.1, w, score)
    }

    /// Scores every stride-1 window over the whole context. The reference
    /// implementation the two-pass scan is checked against, and the ground
    /// truth for agreement-rate measurements.
    pub fn align_exhaustive(
        &self,
        context: &str,
        translated_answer: &str,
    ) -> Result<AlignmentResult, ScorerError> {
        let ctx = tokenize(context);
        let w = tokenize(translated_answer).len();
        if ctx.is_empty() || w == 0 {
            return Ok(AlignmentResult::failed());
        }
        let (start, score) =
            scan_windows(&ctx, 0, ctx.len(), translated_answer, w, 1, self.scorer.as_ref())?;
        self.assemble(&ctx, context, start, ctx.len(), w, score)
    }

    fn assemble(
        &self,
        ctx: &TokenSequence,
        context: &str,
        token_start: usize,
        scan_end: usize,
        w: usize,
        score: f64,
    ) -> Result<AlignmentResult, ScorerError> {
        let token_end = (token_start + w).min(scan_end);
        let (char_start, char_end) =
            char_span_of_tokens(ctx, token_start, token_end).expect("window within sequence");
        let replaced_answer = codepoint_slice(context, char_start, char_end)
            .expect("span within context")
            .to_owned();
        let flag = if score >= self.threshold {
            AlignmentStatus::Ok
        } else {
            AlignmentStatus::LowConfidence
        };
        Ok(AlignmentResult {
            char_start,
            char_end,
            token_start,
            token_end,
            replaced_answer,
            score,
            flag,
        })
    }
}

/// One-shot [`Aligner::align`] that builds the scorer from `cfg`.
pub fn align_answer(
    context: &str,
    translated_answer: &str,
    cfg: &AlignerConfig,
) -> Result<AlignmentResult, ScorerError> {
    Aligner::from_config(cfg)?.align(context, translated_answer)
}

/// One-shot [`Aligner::align_exhaustive`].
pub fn exhaustive_align(
    context: &str,
    translated_answer: &str,
    cfg: &AlignerConfig,
) -> Result<AlignmentResult, ScorerError> {
    Aligner::from_config(cfg)?.align_exhaustive(context, translated_answer)
}

/// Scores windows starting at token offsets `0, w, 2w, ...`; the final
/// window is truncated at the sequence end. Returns the start and score of
/// the best window, earliest on ties.
///
/// Panics if the sequence is empty or `w` is zero.
pub fn coarse_scan(
    ctx: &TokenSequence,
    answer: &str,
    w: usize,
    scorer: &dyn Scorer,
) -> Result<(usize, f64), ScorerError> {
    assert!(w >= 1, "window size must be at least 1");
    assert!(!ctx.is_empty(), "cannot scan an empty token sequence");
    scan_windows(ctx, 0, ctx.len(), answer, w, w, scorer)
}

/// The best coarse window united with its immediately preceding and
/// succeeding windows: `[best_start - w, best_start + 2w)` clipped to the
/// sequence bounds.
pub fn merge_region(ctx_len_tokens: usize, best_start: usize, w: usize) -> (usize, usize) {
    (
        best_start.saturating_sub(w),
        (best_start + 2 * w).min(ctx_len_tokens),
    )
}

/// Scores every stride-1 window inside `region`, windows truncated at the
/// region end. Returns the start and score of the best window, earliest on
/// ties.
///
/// Panics if the region is empty or out of bounds.
pub fn fine_scan(
    ctx: &TokenSequence,
    region: (usize, usize),
    answer: &str,
    w: usize,
    scorer: &dyn Scorer,
) -> Result<(usize, f64), ScorerError> {
    let (start, end) = region;
    assert!(start < end && end <= ctx.len(), "region out of bounds");
    assert!(w >= 1, "window size must be at least 1");
    scan_windows(ctx, start, end, answer, w, 1, scorer)
}

fn scan_windows(
    ctx: &TokenSequence,
    scan_start: usize,
    scan_end: usize,
    answer: &str,
    w: usize,
    stride: usize,
    scorer: &dyn Scorer,
) -> Result<(usize, f64), ScorerError> {
    let mut best_start = scan_start;
    let mut best_score = f64::NEG_INFINITY;
    let mut start = scan_start;
    while start < scan_end {
        let end = (start + w).min(scan_end);
        let window = ctx.window_text(start, end).expect("window within sequence");
        let score = scorer.score(window, answer)?;
        if score > best_score {
            best_start = start;
            best_score = score;
        }
        start += stride;
    }
    Ok((best_start, best_score))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FOX_CONTEXT: &str = "The quick brown fox jumped over the lazy dog. The dog persuaded \
                               the fox through the forest. Eventually, the fox escaped and the \
                               dog returned home.";
    const FOX_ANSWER: &str = "chased the fox through";

    fn jaccard_cfg() -> AlignerConfig {
        AlignerConfig {
            scorer: ScorerSpec::BagJaccard,
            low_confidence_threshold: DEFAULT_LOW_CONFIDENCE_THRESHOLD,
        }
    }

    fn jaccard() -> Box<dyn Scorer> {
        ScorerSpec::BagJaccard.build().unwrap()
    }

    #[test]
    fn coarse_scan_fox_best_window() {
        let ctx = tokenize(FOX_CONTEXT);
        assert_eq!(ctx.len(), 26);
        let (start, score) = coarse_scan(&ctx, FOX_ANSWER, 4, jaccard().as_ref()).unwrap();
        assert_eq!(start, 12);
        assert!((score - 0.6).abs() < 1e-12);
    }

    #[test]
    fn coarse_scan_truncates_short_context() {
        let ctx = tokenize("one two three");
        let (start, _) = coarse_scan(&ctx, "anything here", 4, jaccard().as_ref()).unwrap();
        assert_eq!(start, 0);
        assert_eq!(ctx.window_text(0, ctx.len()).unwrap(), "one two three");
    }

    #[test]
    fn coarse_scan_whole_context_self_match() {
        let ctx = tokenize("a b c");
        let (start, score) = coarse_scan(&ctx, "a b c", 3, jaccard().as_ref()).unwrap();
        assert_eq!(start, 0);
        assert_eq!(score, 1.0);
    }

    #[test]
    fn merge_region_formula() {
        assert_eq!(merge_region(26, 12, 4), (8, 20));
        assert_eq!(merge_region(26, 0, 4), (0, 8));
        assert_eq!(merge_region(26, 24, 4), (20, 26));
    }

    #[test]
    fn fine_scan_fox_earliest_tie() {
        let ctx = tokenize(FOX_CONTEXT);
        // windows 11, 12, and 13 all score 0.6; earliest wins
        let (start, score) = fine_scan(&ctx, (8, 20), FOX_ANSWER, 4, jaccard().as_ref()).unwrap();
        assert_eq!(start, 11);
        assert!((score - 0.6).abs() < 1e-12);
    }

    #[test]
    fn fine_scan_region_of_window_size() {
        let ctx = tokenize("a b c d e f");
        let (start, score) = fine_scan(&ctx, (2, 4), "c d", 2, jaccard().as_ref()).unwrap();
        assert_eq!(start, 2);
        assert_eq!(score, 1.0);
    }

    #[test]
    fn align_fox_recovers_paper_span() {
        let result = align_answer(FOX_CONTEXT, FOX_ANSWER, &jaccard_cfg()).unwrap();
        assert_eq!(result.replaced_answer, "persuaded the fox through");
        assert_eq!((result.token_start, result.token_end), (11, 15));
        assert_eq!((result.char_start, result.char_end), (54, 79));
        assert!((result.score - 0.6).abs() < 1e-12);
        assert_eq!(result.flag, AlignmentStatus::Ok);
    }

    #[test]
    fn exhaustive_fox_agrees() {
        // the stride-1 argmax over the whole context is the same span
        let exhaustive = exhaustive_align(FOX_CONTEXT, FOX_ANSWER, &jaccard_cfg()).unwrap();
        let two_pass = align_answer(FOX_CONTEXT, FOX_ANSWER, &jaccard_cfg()).unwrap();
        assert_eq!(exhaustive, two_pass);
    }

    #[test]
    fn verbatim_answer_found_at_first_occurrence() {
        let ctx = "x y a b c z z a b c";
        for spec in [
            ScorerSpec::BagJaccard,
            ScorerSpec::CharNgramCosine { ngram_n: 3 },
            ScorerSpec::Levenshtein,
        ] {
            let cfg = AlignerConfig {
                scorer: spec,
                low_confidence_threshold: 0.35,
            };
            let result = align_answer(ctx, "a b c", &cfg).unwrap();
            assert_eq!(result.score, 1.0);
            assert_eq!(result.flag, AlignmentStatus::Ok);
            assert_eq!((result.token_start, result.token_end), (2, 5));
            let oracle = exhaustive_align(ctx, "a b c", &cfg).unwrap();
            assert_eq!(result, oracle);
        }
    }

    #[test]
    fn disjoint_answer_flagged_low_confidence() {
        let result = align_answer("p q r s", "x y", &jaccard_cfg()).unwrap();
        assert_eq!(result.score, 0.0);
        assert_eq!(result.flag, AlignmentStatus::LowConfidence);
    }

    #[test]
    fn empty_inputs_fail() {
        for (ctx, ans) in [("", "x"), ("x", ""), ("   ", "x"), ("x", " \t")] {
            let result = align_answer(ctx, ans, &jaccard_cfg()).unwrap();
            assert_eq!(result.flag, AlignmentStatus::Failed);
            assert_eq!((result.char_start, result.char_end), (0, 0));
            assert_eq!(result.replaced_answer, "");
        }
    }

    #[test]
    fn threshold_bounds_validated() {
        let cfg = AlignerConfig {
            scorer: ScorerSpec::BagJaccard,
            low_confidence_threshold: 1.5,
        };
        assert!(Aligner::from_config(&cfg).is_err());
    }

    fn words(max_len: usize) -> impl Strategy<Value = Vec<String>> {
        proptest::collection::vec("[a-e]{1,3}", 1..max_len)
    }

    proptest! {
        // Non-failed results slice the context verbatim.
        #[test]
        fn span_fidelity(ctx_words in words(40), ans_words in words(6)) {
            let context = ctx_words.join(" ");
            let answer = ans_words.join(" ");
            let result = align_answer(&context, &answer, &jaccard_cfg()).unwrap();
            prop_assert_ne!(result.flag, AlignmentStatus::Failed);
            let slice = codepoint_slice(&context, result.char_start, result.char_end).unwrap();
            prop_assert_eq!(slice, result.replaced_answer.as_str());
        }

        // The fine pass never scores below the coarse pass: the coarse best
        // window is always among the fine candidates.
        #[test]
        fn fine_score_dominates_coarse(ctx_words in words(60), ans_words in words(6)) {
            let context = ctx_words.join(" ");
            let answer = ans_words.join(" ");
            let ctx = tokenize(&context);
            let w = tokenize(&answer).len();
            let scorer = jaccard();
            let (coarse_start, coarse_score) =
                coarse_scan(&ctx, &answer, w, scorer.as_ref()).unwrap();
            let region = merge_region(ctx.len(), coarse_start, w);
            let (_, fine_score) = fine_scan(&ctx, region, &answer, w, scorer.as_ref()).unwrap();
            prop_assert!(
                fine_score >= coarse_score,
                "fine {fine_score} < coarse {coarse_score}"
            );
        }

        // Windows are w tokens wide unless truncated by the scan boundary.
        #[test]
        fn window_width_invariant(ctx_words in words(40), ans_words in words(6)) {
            let context = ctx_words.join(" ");
            let answer = ans_words.join(" ");
            let w = tokenize(&answer).len();
            let ctx_len = tokenize(&context).len();
            let result = align_answer(&context, &answer, &jaccard_cfg()).unwrap();
            let (_, region_end) = merge_region(
                ctx_len,
                coarse_scan(&tokenize(&context), &answer, w, jaccard().as_ref()).unwrap().0,
                w,
            );
            prop_assert_eq!(
                result.token_end - result.token_start,
                w.min(region_end - result.token_start)
            );
        }

        // On short contexts the merged region covers everything, so the
        // two-pass scan must agree exactly with the exhaustive oracle.
        #[test]
        fn oracle_equivalence_within_two_windows(ans_words in words(6), ctx_seed in words(12)) {
            let answer = ans_words.join(" ");
            let w = tokenize(&answer).len();
            let ctx_words: Vec<String> = ctx_seed.into_iter().take((2 * w).max(1)).collect();
            let context = ctx_words.join(" ");
            let cfg = jaccard_cfg();
            let fast = align_answer(&context, &answer, &cfg).unwrap();
            let oracle = exhaustive_align(&context, &answer, &cfg).unwrap();
            prop_assert_eq!(fast, oracle);
        }

        // Same inputs, same config, same output.
        #[test]
        fn deterministic(ctx_words in words(30), ans_words in words(5)) {
            let context = ctx_words.join(" ");
            let answer = ans_words.join(" ");
            let a = align_answer(&context, &answer, &jaccard_cfg()).unwrap();
            let b = align_answer(&context, &answer, &jaccard_cfg()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
