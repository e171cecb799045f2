//! SQuAD 2.0 parsing, validation, splitting, and the extended JSONL output
//! format that adds alignment fields on top of the SQuAD record shape.
//!
//! Character offsets throughout are Unicode codepoint indices into the
//! context, matching the original SQuAD convention.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SquadError;
use crate::text::tokenize::{codepoint_len, codepoint_slice, tokenize};

/// One SQuAD-style item. `answer_start` is a codepoint offset into
/// `context`, or -1 when the question is unanswerable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaRecord {
    pub id: String,
    pub title: String,
    pub context: String,
    pub question: String,
    pub answer_text: String,
    pub answer_start: i64,
    pub is_impossible: bool,
}

/// An ordered dataset with a BCP-47-ish language tag ("en", "hi", "mr").
/// The tag is runtime metadata; the SQuAD JSON form persists it under an
/// optional top-level "language" key, the extended JSONL form does not.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<QaRecord>,
    #[serde(default)]
    pub language_tag: String,
}

impl Dataset {
    pub fn new(records: Vec<QaRecord>) -> Self {
        Self {
            records,
            language_tag: String::new(),
        }
    }

    pub fn with_language_tag(mut self, tag: &str) -> Self {
        self.language_tag = tag.to_owned();
        self
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Outcome class of an alignment, carried on every output record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentFlag {
    Ok,
    LowConfidence,
    Failed,
    PassthroughUnanswerable,
}

/// A QaRecord extended with the alignment outcome: exclusive character end,
/// half-open token span, similarity score, and status flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedRecord {
    pub id: String,
    pub title: String,
    pub context: String,
    pub question: String,
    pub answer_text: String,
    pub answer_start: i64,
    pub answer_end: i64,
    pub answer_token_start: i64,
    pub answer_token_end: i64,
    pub alignment_score: f64,
    pub alignment_flag: AlignmentFlag,
    pub is_impossible: bool,
}

impl AlignedRecord {
    /// Projects back to the plain SQuAD record shape.
    pub fn to_qa_record(&self) -> QaRecord {
        QaRecord {
            id: self.id.clone(),
            title: self.title.clone(),
            context: self.context.clone(),
            question: self.question.clone(),
            answer_text: self.answer_text.clone(),
            answer_start: self.answer_start,
            is_impossible: self.is_impossible,
        }
    }
}

/// Dataset of aligned records; same ordering guarantees as [`Dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedDataset {
    pub records: Vec<AlignedRecord>,
    #[serde(default)]
    pub language_tag: String,
}

impl AlignedDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    /// Nested SQuAD 2.0 JSON: data -> paragraphs -> qas.
    SquadJson,
    /// One flat extended record per line.
    ExtendedJsonl,
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetFormat::SquadJson => f.write_str("squad_json"),
            DatasetFormat::ExtendedJsonl => f.write_str("extended_jsonl"),
        }
    }
}

// ---------------------------------------------------------------------------
// SQuAD JSON wire shapes
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SquadFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    language: Option<String>,
    data: Vec<SquadArticle>,
}

#[derive(Serialize, Deserialize)]
struct SquadArticle {
    #[serde(default)]
    title: String,
    paragraphs: Vec<SquadParagraph>,
}

#[derive(Serialize, Deserialize)]
struct SquadParagraph {
    context: String,
    qas: Vec<SquadQa>,
}

#[derive(Serialize, Deserialize)]
struct SquadQa {
    id: String,
    question: String,
    #[serde(default)]
    answers: Vec<SquadAnswer>,
    #[serde(default)]
    is_impossible: bool,
}

#[derive(Serialize, Deserialize)]
struct SquadAnswer {
    text: String,
    answer_start: i64,
}

// ---------------------------------------------------------------------------
// Parse / write
// ---------------------------------------------------------------------------

/// Parses a serialized dataset. Multiple listed answers collapse to the
/// first; a missing `is_impossible` defaults to false; record ids must be
/// unique.
pub fn parse_dataset(text: &str, format: DatasetFormat) -> Result<Dataset, SquadError> {
    match format {
        DatasetFormat::SquadJson => parse_squad_json(text),
        DatasetFormat::ExtendedJsonl => {
            let aligned = parse_aligned(text)?;
            Ok(Dataset {
                records: aligned.records.iter().map(AlignedRecord::to_qa_record).collect(),
                language_tag: aligned.language_tag,
            })
        }
    }
}

fn parse_squad_json(text: &str) -> Result<Dataset, SquadError> {
    let file: SquadFile = serde_json::from_str(text).map_err(|e| SquadError::Parse {
        locator: format!("line {}", e.line()),
        message: e.to_string(),
    })?;

    let mut records = Vec::new();
    for (ai, article) in file.data.iter().enumerate() {
        for (pi, paragraph) in article.paragraphs.iter().enumerate() {
            for qa in &paragraph.qas {
                let locator = format!("data[{ai}].paragraphs[{pi}].qas id {:?}", qa.id);
                let (answer_text, answer_start) = if qa.is_impossible {
                    (String::new(), -1)
                } else {
                    let first = qa.answers.first().ok_or_else(|| SquadError::Parse {
                        locator: locator.clone(),
                        message: "answerable question has no answers".into(),
                    })?;
                    (first.text.clone(), first.answer_start)
                };
                records.push(QaRecord {
                    id: qa.id.clone(),
                    title: article.title.clone(),
                    context: paragraph.context.clone(),
                    question: qa.question.clone(),
                    answer_text,
                    answer_start,
                    is_impossible: qa.is_impossible,
                });
            }
        }
    }

    check_unique_ids(records.iter().map(|r| r.id.as_str()))?;
    Ok(Dataset {
        records,
        language_tag: file.language.unwrap_or_default(),
    })
}

/// Parses the extended JSONL format, one flat record per line.
pub fn parse_aligned(text: &str) -> Result<AlignedDataset, SquadError> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: AlignedRecord =
            serde_json::from_str(line).map_err(|e| SquadError::Parse {
                locator: format!("line {}", idx + 1),
                message: e.to_string(),
            })?;
        records.push(record);
    }
    check_unique_ids(records.iter().map(|r| r.id.as_str()))?;
    Ok(AlignedDataset {
        records,
        language_tag: String::new(),
    })
}

fn check_unique_ids<'a>(ids: impl Iterator<Item = &'a str>) -> Result<(), SquadError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(SquadError::DuplicateId(id.to_owned()));
        }
    }
    Ok(())
}

/// Serializes a dataset. `parse_dataset(write_dataset(d, f), f)` is
/// structurally equal to `d` (for extended JSONL, which does not persist
/// the language tag, up to an empty tag).
pub fn write_dataset(d: &Dataset, format: DatasetFormat) -> Result<String, SquadError> {
    match format {
        DatasetFormat::SquadJson => Ok(write_squad_json(d)),
        DatasetFormat::ExtendedJsonl => {
            let promoted: Result<Vec<AlignedRecord>, SquadError> =
                d.records.iter().map(promote_record).collect();
            Ok(write_aligned_records(&promoted?))
        }
    }
}

fn write_squad_json(d: &Dataset) -> String {
    // One article per title run, one paragraph per context run, preserving
    // record order.
    let mut articles: Vec<SquadArticle> = Vec::new();
    for record in &d.records {
        let answers = if record.is_impossible {
            Vec::new()
        } else {
            vec![SquadAnswer {
                text: record.answer_text.clone(),
                answer_start: record.answer_start,
            }]
        };
        let qa = SquadQa {
            id: record.id.clone(),
            question: record.question.clone(),
            answers,
            is_impossible: record.is_impossible,
        };

        let start_new_article = articles.last().map(|a| a.title != record.title).unwrap_or(true);
        if start_new_article {
            articles.push(SquadArticle {
                title: record.title.clone(),
                paragraphs: Vec::new(),
            });
        }
        let article = articles.last_mut().expect("pushed above");
        let start_new_paragraph = article
            .paragraphs
            .last()
            .map(|p| p.context != record.context)
            .unwrap_or(true);
        if start_new_paragraph {
            article.paragraphs.push(SquadParagraph {
                context: record.context.clone(),
                qas: Vec::new(),
            });
        }
        article.paragraphs.last_mut().expect("pushed above").qas.push(qa);
    }

    let file = SquadFile {
        version: Some("v2.0".to_owned()),
        language: if d.language_tag.is_empty() {
            None
        } else {
            Some(d.language_tag.clone())
        },
        data: articles,
    };
    serde_json::to_string_pretty(&file).expect("dataset serializes")
}

/// Serializes aligned records as extended JSONL, one record per line.
pub fn write_aligned(d: &AlignedDataset) -> String {
    write_aligned_records(&d.records)
}

fn write_aligned_records(records: &[AlignedRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Lifts a plain record into the extended shape by deriving span fields
/// from the record's own validated offsets.
fn promote_record(r: &QaRecord) -> Result<AlignedRecord, SquadError> {
    if r.is_impossible {
        return Ok(AlignedRecord {
            id: r.id.clone(),
            title: r.title.clone(),
            context: r.context.clone(),
            question: r.question.clone(),
            answer_text: String::new(),
            answer_start: -1,
            answer_end: -1,
            answer_token_start: -1,
            answer_token_end: -1,
            alignment_score: 0.0,
            alignment_flag: AlignmentFlag::PassthroughUnanswerable,
            is_impossible: true,
        });
    }

    let violations = validate_record(r);
    if !violations.is_empty() {
        return Err(SquadError::InvalidArgument(format!(
            "cannot serialize invalid record {:?}: {}",
            r.id, violations[0]
        )));
    }
    let start = r.answer_start as usize;
    let end = start + codepoint_len(&r.answer_text);
    let seq = tokenize(&r.context);
    let token_start = seq
        .tokens()
        .iter()
        .position(|t| t.char_end > start)
        .unwrap_or(0);
    let token_end = seq
        .tokens()
        .iter()
        .rposition(|t| t.char_start < end)
        .map(|i| i + 1)
        .unwrap_or(token_start);

    Ok(AlignedRecord {
        id: r.id.clone(),
        title: r.title.clone(),
        context: r.context.clone(),
        question: r.question.clone(),
        answer_text: r.answer_text.clone(),
        answer_start: r.answer_start,
        answer_end: end as i64,
        answer_token_start: token_start as i64,
        answer_token_end: token_end as i64,
        alignment_score: 1.0,
        alignment_flag: AlignmentFlag::Ok,
        is_impossible: false,
    })
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// A broken record invariant: which field, which rule, and what happened.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}): {}", self.field, self.rule, self.message)
    }
}

fn violation(field: &str, rule: &str, message: String) -> Violation {
    Violation {
        field: field.to_owned(),
        rule: rule.to_owned(),
        message,
    }
}

/// Checks the QaRecord invariants; an empty result means the record is
/// valid. Violations are data, not errors.
pub fn validate_record(r: &QaRecord) -> Vec<Violation> {
    let mut violations = Vec::new();

    if r.is_impossible {
        if !r.answer_text.is_empty() {
            violations.push(violation(
                "answer_text",
                "unanswerable-convention",
                "unanswerable record must have an empty answer".into(),
            ));
        }
        if r.answer_start != -1 {
            violations.push(violation(
                "answer_start",
                "unanswerable-convention",
                format!("unanswerable record must have answer_start -1, got {}", r.answer_start),
            ));
        }
        return violations;
    }

    if r.answer_start < 0 {
        violations.push(violation(
            "answer_start",
            "span-bounds",
            format!("answerable record has negative answer_start {}", r.answer_start),
        ));
        return violations;
    }

    let start = r.answer_start as usize;
    let end = start + codepoint_len(&r.answer_text);
    match codepoint_slice(&r.context, start, end) {
        Some(slice) if slice == r.answer_text => {}
        Some(slice) => violations.push(violation(
            "answer_start",
            "span-mismatch",
            format!(
                "context[{start}..{end}] is {slice:?}, expected {:?}",
                r.answer_text
            ),
        )),
        None => violations.push(violation(
            "answer_start",
            "span-bounds",
            format!(
                "span [{start}..{end}) exceeds context length {}",
                codepoint_len(&r.context)
            ),
        )),
    }
    violations
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

/// Partitions a dataset into train/test/valid by a seeded pseudo-random
/// permutation. Fractions must sum to 1 within 1e-9. Test and valid sizes
/// are `round(fraction * N)`; the remainder goes to train.
pub fn split_dataset(
    d: &Dataset,
    train_fraction: f64,
    test_fraction: f64,
    valid_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset), SquadError> {
    let sum = train_fraction + test_fraction + valid_fraction;
    if (sum - 1.0).abs() > 1e-9 {
        return Err(SquadError::InvalidArgument(format!(
            "split fractions must sum to 1, got {sum}"
        )));
    }
    if [train_fraction, test_fraction, valid_fraction]
        .iter()
        .any(|f| !(0.0..=1.0).contains(f))
    {
        return Err(SquadError::InvalidArgument(
            "split fractions must lie in [0, 1]".into(),
        ));
    }
    if d.is_empty() {
        return Err(SquadError::InvalidArgument(
            "cannot split an empty dataset".into(),
        ));
    }

    let n = d.len();
    let n_test = ((test_fraction * n as f64).round() as usize).min(n);
    let n_valid = ((valid_fraction * n as f64).round() as usize).min(n - n_test);
    let n_train = n - n_test - n_valid;

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let pick = |idxs: &[usize]| -> Dataset {
        Dataset {
            records: idxs.iter().map(|&i| d.records[i].clone()).collect(),
            language_tag: d.language_tag.clone(),
        }
    };

    let train = pick(&order[..n_train]);
    let test = pick(&order[n_train..n_train + n_test]);
    let valid = pick(&order[n_train + n_test..]);
    Ok((train, test, valid))
}
