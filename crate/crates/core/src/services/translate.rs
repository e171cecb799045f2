//! Machine translation backends: identity and table-mapping for
//! deterministic fixtures, and a remote JSON-over-HTTP client for real
//! model servers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::services::http::{endpoint_url, JsonHttp, RetryPolicy};

pub const DEFAULT_BATCH_SIZE: usize = 16;
pub const DEFAULT_MAX_RETRIES: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranslationKind {
    /// Returns inputs unchanged. Lets the full pipeline run without any
    /// model and exercises the verbatim-recovery path.
    Identity,
    /// Substitutes whole-token matches from a table; other tokens and all
    /// whitespace pass through verbatim. Builds deterministic paraphrase
    /// fixtures that exercise the aligner's non-verbatim path.
    Mapping,
    /// Sends batches to a translation server.
    Remote,
}

/// Configuration of a translation backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationBackendSpec {
    pub kind: TranslationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping_table: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    pub source_lang: String,
    pub target_lang: String,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
}

fn default_batch_size() -> usize {
    DEFAULT_BATCH_SIZE
}

fn default_max_retries() -> u32 {
    DEFAULT_MAX_RETRIES
}

impl TranslationBackendSpec {
    pub fn identity(source_lang: &str, target_lang: &str) -> Self {
        Self {
            kind: TranslationKind::Identity,
            mapping_table: None,
            endpoint: None,
            source_lang: source_lang.to_owned(),
            target_lang: target_lang.to_owned(),
            batch_size: DEFAULT_BATCH_SIZE,
            max_retries: DEFAULT_MAX_RETRIES,
        }
    }

    pub fn mapping(
        table: BTreeMap<String, String>,
        source_lang: &str,
        target_lang: &str,
    ) -> Self {
        Self {
            kind: TranslationKind::Mapping,
            mapping_table: Some(table),
            ..Self::identity(source_lang, target_lang)
        }
    }

    pub fn remote(endpoint: &str, source_lang: &str, target_lang: &str) -> Self {
        Self {
            kind: TranslationKind::Remote,
            endpoint: Some(endpoint.to_owned()),
            ..Self::identity(source_lang, target_lang)
        }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        match self.kind {
            TranslationKind::Mapping if self.mapping_table.is_none() => Err(
                ServiceError::InvalidSpec("mapping backend requires a mapping_table".into()),
            ),
            TranslationKind::Remote if self.endpoint.is_none() => Err(
                ServiceError::InvalidSpec("remote backend requires an endpoint".into()),
            ),
            _ if self.batch_size == 0 => Err(ServiceError::InvalidSpec(
                "batch_size must be at least 1".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// A ready-to-use translation backend. Construct once and share; the remote
/// variant holds a pooled HTTP client.
pub struct Translator {
    spec: TranslationBackendSpec,
    http: Option<JsonHttp>,
}

#[derive(Serialize)]
struct TranslateRequest<'a> {
    source_lang: &'a str,
    target_lang: &'a str,
    texts: &'a [String],
}

#[derive(Deserialize)]
struct TranslateResponse {
    translations: Vec<String>,
}

impl Translator {
    pub fn new(spec: TranslationBackendSpec) -> Result<Self, ServiceError> {
        spec.validate()?;
        let http = match spec.kind {
            TranslationKind::Remote => Some(JsonHttp::new(
                RetryPolicy::with_max_retries(spec.max_retries),
                DEFAULT_MAX_INFLIGHT,
            )),
            _ => None,
        };
        Ok(Self { spec, http })
    }

    pub fn spec(&self) -> &TranslationBackendSpec {
        &self.spec
    }

    /// Translates `texts`, returning exactly one output per input in the
    /// same order. Remote batches are capped at `batch_size` requests and
    /// a failure carries the input indices of the batch that failed.
    pub fn translate_batch(&self, texts: &[String]) -> Result<Vec<String>, ServiceError> {
        if texts.is_empty() {
            return Err(ServiceError::InvalidRequest(
                "translate_batch requires a nonempty list of texts".into(),
            ));
        }
        match self.spec.kind {
            TranslationKind::Identity => Ok(texts.to_vec()),
            TranslationKind::Mapping => {
                let table = self.spec.mapping_table.as_ref().expect("validated");
                Ok(texts.iter().map(|t| map_whole_tokens(t, table)).collect())
            }
            TranslationKind::Remote => self.translate_remote(texts),
        }
    }

    fn translate_remote(&self, texts: &[String]) -> Result<Vec<String>, ServiceError> {
        let http = self.http.as_ref().expect("remote backend has a client");
        let endpoint = self.spec.endpoint.as_ref().expect("validated");
        let url = endpoint_url(endpoint, "translate");
        let mut out = Vec::with_capacity(texts.len());
        for (chunk_idx, chunk) in texts.chunks(self.spec.batch_size).enumerate() {
            let start = chunk_idx * self.spec.batch_size;
            let fail = |source: ServiceError| ServiceError::TranslationBatch {
                indices: start..start + chunk.len(),
                source: Box::new(source),
            };
            let req = TranslateRequest {
                source_lang: &self.spec.source_lang,
                target_lang: &self.spec.target_lang,
                texts: chunk,
            };
            let resp: TranslateResponse = http.post_json(&url, &req).map_err(fail)?;
            if resp.translations.len() != chunk.len() {
                return Err(fail(ServiceError::Protocol {
                    url: url.clone(),
                    detail: format!(
                        "expected {} translations, got {}",
                        chunk.len(),
                        resp.translations.len()
                    ),
                }));
            }
            out.extend(resp.translations);
        }
        Ok(out)
    }
}

const DEFAULT_MAX_INFLIGHT: usize = 8;

/// One-shot form of [`Translator::translate_batch`].
pub fn translate_batch(
    spec: &TranslationBackendSpec,
    texts: &[String],
) -> Result<Vec<String>, ServiceError> {
    Translator::new(spec.clone())?.translate_batch(texts)
}

/// Replaces each whitespace-delimited token found in `table` with its
/// mapped value, preserving all whitespace and unmapped tokens verbatim.
pub fn map_whole_tokens(text: &str, table: &BTreeMap<String, String>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut token = String::new();
    for ch in text.chars() {
        if ch.is_whitespace() {
            flush_mapped(&mut out, &mut token, table);
            out.push(ch);
        } else {
            token.push(ch);
        }
    }
    flush_mapped(&mut out, &mut token, table);
    out
}

fn flush_mapped(out: &mut String, token: &mut String, table: &BTreeMap<String, String>) {
    if token.is_empty() {
        return;
    }
    match table.get(token.as_str()) {
        Some(mapped) => out.push_str(mapped),
        None => out.push_str(token),
    }
    token.clear();
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn identity_returns_inputs() {
        let t = Translator::new(TranslationBackendSpec::identity("en", "en")).unwrap();
        let out = t.translate_batch(&["the fox".to_owned()]).unwrap();
        assert_eq!(out, vec!["the fox"]);
    }

    #[test]
    fn mapping_substitutes_whole_tokens() {
        let spec =
            TranslationBackendSpec::mapping(table(&[("fox", "लोमड़ी")]), "en", "hi");
        let t = Translator::new(spec).unwrap();
        let out = t.translate_batch(&["the fox ran".to_owned()]).unwrap();
        assert_eq!(out, vec!["the लोमड़ी ran"]);
    }

    #[test]
    fn mapping_does_not_touch_substrings_or_whitespace() {
        let spec = TranslationBackendSpec::mapping(table(&[("fox", "X")]), "en", "hi");
        let t = Translator::new(spec).unwrap();
        let out = t
            .translate_batch(&["foxes  fox\tfox.".to_owned()])
            .unwrap();
        assert_eq!(out, vec!["foxes  X\tfox."]);
    }

    #[test]
    fn mapping_without_table_rejected() {
        let mut spec = TranslationBackendSpec::identity("en", "hi");
        spec.kind = TranslationKind::Mapping;
        assert!(Translator::new(spec).is_err());
    }

    #[test]
    fn remote_without_endpoint_rejected() {
        let mut spec = TranslationBackendSpec::identity("en", "hi");
        spec.kind = TranslationKind::Remote;
        assert!(Translator::new(spec).is_err());
    }

    #[test]
    fn empty_batch_rejected() {
        let t = Translator::new(TranslationBackendSpec::identity("en", "en")).unwrap();
        assert!(t.translate_batch(&[]).is_err());
    }
}
