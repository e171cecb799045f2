//! Shared JSON-over-HTTP plumbing: retries with exponential backoff and a
//! cap on concurrent in-flight requests per client.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::ServiceError;

/// Retry behavior for all remote endpoints: a failed attempt (non-2xx,
/// transport error, or undecodable body) is retried up to `max_retries`
/// times with exponential backoff starting at `initial_backoff`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            initial_backoff: Duration::from_millis(250),
        }
    }
}

impl RetryPolicy {
    pub fn with_max_retries(max_retries: u32) -> Self {
        Self {
            max_retries,
            ..Self::default()
        }
    }
}

pub(crate) struct JsonHttp {
    client: reqwest::blocking::Client,
    policy: RetryPolicy,
    inflight: InflightLimiter,
    batch_counter: AtomicU64,
}

impl JsonHttp {
    pub fn new(policy: RetryPolicy, max_inflight: usize) -> Self {
        Self {
            client: reqwest::blocking::Client::new(),
            policy,
            inflight: InflightLimiter::new(max_inflight),
            batch_counter: AtomicU64::new(0),
        }
    }

    /// POSTs `body` as JSON and decodes the response. Each logical batch
    /// carries a unique `X-Batch-Id` header so retried requests are
    /// idempotent on the server side and never duplicate outputs here:
    /// a retry replaces the failed attempt rather than appending.
    pub fn post_json<B: Serialize, R: DeserializeOwned>(
        &self,
        url: &str,
        body: &B,
    ) -> Result<R, ServiceError> {
        let batch_id = self.batch_counter.fetch_add(1, Ordering::Relaxed);
        let _permit = self.inflight.acquire();
        let attempts = self.policy.max_retries + 1;
        let mut backoff = self.policy.initial_backoff;
        let mut last_error = String::new();
        let mut unreachable = false;

        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
            match self
                .client
                .post(url)
                .header("X-Batch-Id", batch_id.to_string())
                .json(body)
                .send()
            {
                Ok(resp) => {
                    unreachable = false;
                    let status = resp.status();
                    if !status.is_success() {
                        last_error = format!("HTTP status {status}");
                        continue;
                    }
                    match resp.json::<R>() {
                        Ok(decoded) => return Ok(decoded),
                        Err(e) => {
                            last_error = format!("malformed response body: {e}");
                            continue;
                        }
                    }
                }
                Err(e) => {
                    unreachable = true;
                    last_error = e.to_string();
                    continue;
                }
            }
        }

        if unreachable {
            Err(ServiceError::Transport {
                url: url.to_owned(),
                attempts,
                detail: last_error,
            })
        } else {
            Err(ServiceError::Http {
                url: url.to_owned(),
                attempts,
                detail: last_error,
            })
        }
    }
}

/// Counting semaphore bounding concurrent requests from one client.
struct InflightLimiter {
    max: usize,
    count: Mutex<usize>,
    released: Condvar,
}

struct Permit<'a>(&'a InflightLimiter);

impl InflightLimiter {
    fn new(max: usize) -> Self {
        Self {
            max: max.max(1),
            count: Mutex::new(0),
            released: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut count = self.count.lock().unwrap();
        while *count >= self.max {
            count = self.released.wait(count).unwrap();
        }
        *count += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut count = self.0.count.lock().unwrap();
        *count -= 1;
        self.0.released.notify_one();
    }
}

/// Joins a base endpoint and a path segment without doubling slashes.
pub(crate) fn endpoint_url(base: &str, path: &str) -> String {
    format!("{}/{}", base.trim_end_matches('/'), path.trim_start_matches('/'))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_join() {
        assert_eq!(endpoint_url("http://h:1/", "/embed"), "http://h:1/embed");
        assert_eq!(endpoint_url("http://h:1", "embed"), "http://h:1/embed");
    }
}
