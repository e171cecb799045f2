//! Clients and mocks for the three external model services the toolkit
//! consumes: machine translation, sentence embeddings, and NER tagging.
//!
//! All remote traffic is minimal JSON over HTTP so any model server can be
//! fronted by a thin adapter:
//!
//! - `POST /translate` `{"source_lang", "target_lang", "texts": [..]}` ->
//!   `{"translations": [..]}`
//! - `POST /embed` `{"texts": [..]}` -> `{"vectors": [[..], ..]}`
//! - `POST /ner` `{"texts": [..]}` -> `{"tags": [[[token, tag], ..], ..]}`
//!
//! Non-2xx responses and malformed bodies are retried with exponential
//! backoff starting at 250 ms.

mod embed;
mod http;
pub mod mock_server;
mod ner;
mod translate;

pub use embed::{embed_batch, EmbeddingClient};
pub use http::RetryPolicy;
pub use ner::{ner_tag_batch, NerTag, NerTagger, NerTaggerKind, NerTaggerSpec};
pub use translate::{
    map_whole_tokens, translate_batch, TranslationBackendSpec, TranslationKind, Translator,
    DEFAULT_BATCH_SIZE, DEFAULT_MAX_RETRIES,
};
pub use mock_server::MockModelServer;
