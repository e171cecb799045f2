//! Client for the sentence-embedding service.

use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::services::http::{endpoint_url, JsonHttp, RetryPolicy};

/// Blocking client for `POST /embed`. Shareable across workers; concurrent
/// requests are bounded.
pub struct EmbeddingClient {
    endpoint: String,
    http: JsonHttp,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

impl EmbeddingClient {
    pub fn new(endpoint: String, policy: RetryPolicy) -> Self {
        Self {
            endpoint,
            http: JsonHttp::new(policy, 8),
        }
    }

    /// Embeds `texts`, returning one vector per text in order. All vectors
    /// in a batch must share one dimension; a mismatch is a protocol error
    /// (the body decoded fine, so it is not retried).
    pub fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ServiceError> {
        if texts.is_empty() {
            return Err(ServiceError::InvalidRequest(
                "embed_batch requires a nonempty list of texts".into(),
            ));
        }
        let url = endpoint_url(&self.endpoint, "embed");
        let resp: EmbedResponse = self.http.post_json(&url, &EmbedRequest { texts })?;
        if resp.vectors.len() != texts.len() {
            return Err(ServiceError::Protocol {
                url,
                detail: format!(
                    "expected {} vectors, got {}",
                    texts.len(),
                    resp.vectors.len()
                ),
            });
        }
        let dim = resp.vectors[0].len();
        if resp.vectors.iter().any(|v| v.len() != dim) {
            return Err(ServiceError::Protocol {
                url,
                detail: "vectors in one batch have mixed dimensions".into(),
            });
        }
        Ok(resp.vectors)
    }
}

/// One-shot form of [`EmbeddingClient::embed_batch`] with default retries.
pub fn embed_batch(endpoint: &str, texts: &[String]) -> Result<Vec<Vec<f64>>, ServiceError> {
    EmbeddingClient::new(endpoint.to_owned(), RetryPolicy::default()).embed_batch(texts)
}
