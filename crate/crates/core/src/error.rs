//! Error types for the toolkit, one enum per subsystem.

use thiserror::Error;

/// Tokenization and span arithmetic failures.
#[derive(Debug, Error)]
pub enum TextError {
    #[error("token range [{token_start}, {token_end}) out of bounds for sequence of {len} tokens")]
    TokenRange {
        token_start: usize,
        token_end: usize,
        len: usize,
    },
}

/// Similarity scorer failures.
#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("invalid scorer spec: {0}")]
    InvalidSpec(String),
    #[error("embedding scorer unavailable: {0}")]
    RemoteUnavailable(String),
}

/// Dataset parsing, validation, and splitting failures.
#[derive(Debug, Error)]
pub enum SquadError {
    #[error("parse error at {locator}: {message}")]
    Parse { locator: String, message: String },
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("{0}")]
    InvalidArgument(String),
}

/// Remote model service failures.
///
/// `Transport` means the service could not be reached at all and is treated
/// as an outage by callers; `Http` and `Protocol` mean the service answered
/// but unusably, which callers may handle per record.
#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid backend spec: {0}")]
    InvalidSpec(String),
    #[error("{0}")]
    InvalidRequest(String),
    #[error("service at {url} unreachable after {attempts} attempts: {detail}")]
    Transport {
        url: String,
        attempts: u32,
        detail: String,
    },
    #[error("request to {url} failed after {attempts} attempts: {detail}")]
    Http {
        url: String,
        attempts: u32,
        detail: String,
    },
    #[error("protocol violation from {url}: {detail}")]
    Protocol { url: String, detail: String },
    #[error("translation failed for inputs {}..{} of the batch: {source}", .indices.start, .indices.end)]
    TranslationBatch {
        indices: std::ops::Range<usize>,
        #[source]
        source: Box<ServiceError>,
    },
}

impl ServiceError {
    /// True when the failure indicates the backend cannot be reached at
    /// all, as opposed to failing on a particular request.
    pub fn is_outage(&self) -> bool {
        match self {
            ServiceError::Transport { .. } => true,
            ServiceError::TranslationBatch { source, .. } => source.is_outage(),
            _ => false,
        }
    }
}

/// Dataset construction pipeline failures.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("translation backend failure: {0}")]
    Service(#[from] ServiceError),
    #[error("scorer failure: {0}")]
    Scorer(#[from] ScorerError),
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Statistics failures.
#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("cannot compute statistics over an empty dataset")]
    EmptyDataset,
    #[error("NER tagger failure: {0}")]
    Tagger(#[from] ServiceError),
}

/// Evaluation failures.
#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("missing predictions for {} record id(s): {}", .0.len(), .0.join(", "))]
    MissingPredictions(Vec<String>),
    #[error("{0}")]
    InvalidArgument(String),
}
