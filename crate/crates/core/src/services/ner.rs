//! Named-entity taggers: a deterministic lookup-based mock and a remote
//! client for a real model server.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::services::http::{endpoint_url, JsonHttp, RetryPolicy};
use crate::text::tokenize::{normalize_token, tokenize};

/// The fixed tag set: seven entity categories plus the outside tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NerTag {
    Date,
    Measure,
    Organization,
    Location,
    Person,
    Designation,
    Time,
    O,
}

impl NerTag {
    /// The seven entity tags, excluding O.
    pub const ENTITY_TAGS: [NerTag; 7] = [
        NerTag::Date,
        NerTag::Measure,
        NerTag::Organization,
        NerTag::Location,
        NerTag::Person,
        NerTag::Designation,
        NerTag::Time,
    ];

    pub fn parse(s: &str) -> Option<NerTag> {
        match s {
            "Date" => Some(NerTag::Date),
            "Measure" => Some(NerTag::Measure),
            "Organization" => Some(NerTag::Organization),
            "Location" => Some(NerTag::Location),
            "Person" => Some(NerTag::Person),
            "Designation" => Some(NerTag::Designation),
            "Time" => Some(NerTag::Time),
            "O" => Some(NerTag::O),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            NerTag::Date => "Date",
            NerTag::Measure => "Measure",
            NerTag::Organization => "Organization",
            NerTag::Location => "Location",
            NerTag::Person => "Person",
            NerTag::Designation => "Designation",
            NerTag::Time => "Time",
            NerTag::O => "O",
        }
    }
}

impl fmt::Display for NerTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NerTaggerKind {
    Mock,
    Remote,
}

/// Configuration of a NER tagger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NerTaggerSpec {
    pub kind: NerTaggerKind,
    /// Normalized token -> tag table for the mock tagger; unknown tokens
    /// get O.
    #[serde(default)]
    pub lookup: BTreeMap<String, NerTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
}

fn default_max_retries() -> u32 {
    3
}

impl NerTaggerSpec {
    pub fn mock(lookup: BTreeMap<String, NerTag>) -> Self {
        Self {
            kind: NerTaggerKind::Mock,
            lookup,
            endpoint: None,
            max_retries: default_max_retries(),
        }
    }

    pub fn remote(endpoint: &str) -> Self {
        Self {
            kind: NerTaggerKind::Remote,
            lookup: BTreeMap::new(),
            endpoint: Some(endpoint.to_owned()),
            max_retries: default_max_retries(),
        }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.kind == NerTaggerKind::Remote && self.endpoint.is_none() {
            return Err(ServiceError::InvalidSpec(
                "remote NER tagger requires an endpoint".into(),
            ));
        }
        Ok(())
    }
}

/// A ready-to-use tagger.
pub struct NerTagger {
    spec: NerTaggerSpec,
    http: Option<JsonHttp>,
}

#[derive(Serialize)]
struct NerRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct NerResponse {
    tags: Vec<Vec<(String, String)>>,
}

impl NerTagger {
    pub fn new(spec: NerTaggerSpec) -> Result<Self, ServiceError> {
        spec.validate()?;
        let http = match spec.kind {
            NerTaggerKind::Remote => Some(JsonHttp::new(
                RetryPolicy::with_max_retries(spec.max_retries),
                8,
            )),
            NerTaggerKind::Mock => None,
        };
        Ok(Self { spec, http })
    }

    /// Tags each text, returning one `(token, tag)` sequence per input.
    pub fn tag_batch(&self, texts: &[String]) -> Result<Vec<Vec<(String, NerTag)>>, ServiceError> {
        match self.spec.kind {
            NerTaggerKind::Mock => Ok(texts.iter().map(|t| self.tag_mock(t)).collect()),
            NerTaggerKind::Remote => self.tag_remote(texts),
        }
    }

    fn tag_mock(&self, text: &str) -> Vec<(String, NerTag)> {
        tokenize(text)
            .tokens()
            .iter()
            .map(|tok| {
                let tag = self
                    .spec
                    .lookup
                    .get(&tok.normalized)
                    .copied()
                    .unwrap_or(NerTag::O);
                (tok.raw.clone(), tag)
            })
            .collect()
    }

    fn tag_remote(&self, texts: &[String]) -> Result<Vec<Vec<(String, NerTag)>>, ServiceError> {
        let http = self.http.as_ref().expect("remote tagger has a client");
        let endpoint = self.spec.endpoint.as_ref().expect("validated");
        let url = endpoint_url(endpoint, "ner");
        let resp: NerResponse = http.post_json(&url, &NerRequest { texts })?;
        if resp.tags.len() != texts.len() {
            return Err(ServiceError::Protocol {
                url,
                detail: format!("expected {} tag sequences, got {}", texts.len(), resp.tags.len()),
            });
        }
        resp.tags
            .into_iter()
            .map(|seq| {
                seq.into_iter()
                    .map(|(token, tag)| {
                        NerTag::parse(&tag)
                            .map(|t| (token, t))
                            .ok_or_else(|| ServiceError::Protocol {
                                url: url.clone(),
                                detail: format!("unknown NER tag {tag:?}"),
                            })
                    })
                    .collect()
            })
            .collect()
    }
}

/// One-shot form of [`NerTagger::tag_batch`].
pub fn ner_tag_batch(
    spec: &NerTaggerSpec,
    texts: &[String],
) -> Result<Vec<Vec<(String, NerTag)>>, ServiceError> {
    NerTagger::new(spec.clone())?.tag_batch(texts)
}

// Mock lookups key on the normalized token form.
pub fn normalized_lookup_key(token: &str) -> String {
    normalize_token(token)
}
