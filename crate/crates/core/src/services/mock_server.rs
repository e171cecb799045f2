//! In-process mock model server speaking the wire protocol of the three
//! external services (`/translate`, `/embed`, `/ner`).
//!
//! Serves deterministic responses so the full remote path — batching,
//! retries, backoff, protocol validation — can run without any model.
//! Used heavily by the test suites; also handy for local dry runs.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

use crate::services::translate::map_whole_tokens;

#[derive(Default)]
struct ServerState {
    running: AtomicBool,
    translate_calls: AtomicU64,
    embed_calls: AtomicU64,
    ner_calls: AtomicU64,
    /// Per-path count of requests that will be answered with HTTP 500.
    fail_next: Mutex<BTreeMap<String, u32>>,
    /// Per-path call threshold after which connections are dropped without
    /// a response, simulating an unreachable backend.
    drop_after: Mutex<BTreeMap<String, u64>>,
    /// Artificial latency per request, for pacing long runs in tests.
    response_delay: Mutex<Duration>,
    /// Whole-token substitutions applied to /translate inputs; empty = echo.
    translate_table: Mutex<BTreeMap<String, String>>,
    /// Exact-text vector overrides for /embed.
    embed_table: Mutex<BTreeMap<String, Vec<f64>>>,
    /// Token -> tag strings for /ner; unknown tokens get "O".
    ner_lookup: Mutex<BTreeMap<String, String>>,
}

/// Handle to a running mock server. Shuts down on drop.
pub struct MockModelServer {
    addr: SocketAddr,
    state: Arc<ServerState>,
}

impl MockModelServer {
    pub fn start() -> std::io::Result<Self> {
        let listener = TcpListener::bind(("127.0.0.1", 0))?;
        let addr = listener.local_addr()?;
        let state = Arc::new(ServerState::default());
        state.running.store(true, Ordering::SeqCst);

        let accept_state = Arc::clone(&state);
        std::thread::spawn(move || {
            for conn in listener.incoming() {
                if !accept_state.running.load(Ordering::SeqCst) {
                    break;
                }
                if let Ok(stream) = conn {
                    let conn_state = Arc::clone(&accept_state);
                    std::thread::spawn(move || {
                        let _ = handle_connection(stream, &conn_state);
                    });
                }
            }
        });

        Ok(Self { addr, state })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn translate_calls(&self) -> u64 {
        self.state.translate_calls.load(Ordering::SeqCst)
    }

    pub fn embed_calls(&self) -> u64 {
        self.state.embed_calls.load(Ordering::SeqCst)
    }

    pub fn ner_calls(&self) -> u64 {
        self.state.ner_calls.load(Ordering::SeqCst)
    }

    pub fn reset_counters(&self) {
        self.state.translate_calls.store(0, Ordering::SeqCst);
        self.state.embed_calls.store(0, Ordering::SeqCst);
        self.state.ner_calls.store(0, Ordering::SeqCst);
    }

    /// The next `n` requests to `path` ("translate", "embed", "ner") are
    /// answered with HTTP 500.
    pub fn fail_next(&self, path: &str, n: u32) {
        self.state
            .fail_next
            .lock()
            .unwrap()
            .insert(path.trim_matches('/').to_owned(), n);
    }

    /// After `calls` successful requests to `path`, every further request
    /// to it has its connection dropped without a response — the client
    /// sees a transport failure, as if the backend went down.
    pub fn drop_connections_after(&self, path: &str, calls: u64) {
        self.state
            .drop_after
            .lock()
            .unwrap()
            .insert(path.trim_matches('/').to_owned(), calls);
    }

    /// Clears any connection-drop threshold for `path`.
    pub fn restore(&self, path: &str) {
        self.state
            .drop_after
            .lock()
            .unwrap()
            .remove(path.trim_matches('/'));
    }

    pub fn set_response_delay(&self, delay: Duration) {
        *self.state.response_delay.lock().unwrap() = delay;
    }

    pub fn set_translate_table(&self, table: BTreeMap<String, String>) {
        *self.state.translate_table.lock().unwrap() = table;
    }

    pub fn set_embed_table(&self, table: BTreeMap<String, Vec<f64>>) {
        *self.state.embed_table.lock().unwrap() = table;
    }

    pub fn set_ner_lookup(&self, lookup: BTreeMap<String, String>) {
        *self.state.ner_lookup.lock().unwrap() = lookup;
    }

    /// Stops accepting connections. Subsequent requests fail at the
    /// transport level, which simulates a backend outage.
    pub fn shutdown(&self) {
        self.state.running.store(false, Ordering::SeqCst);
        // Unblock the accept loop.
        let _ = TcpStream::connect(self.addr);
    }
}

impl Drop for MockModelServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn handle_connection(mut stream: TcpStream, state: &ServerState) -> std::io::Result<()> {
    let (path, body) = match read_request(&mut stream)? {
        Some(req) => req,
        None => return Ok(()),
    };

    let delay = *state.response_delay.lock().unwrap();
    if !delay.is_zero() {
        std::thread::sleep(delay);
    }

    let path = path.trim_matches('/').to_owned();
    {
        let drop_after = state.drop_after.lock().unwrap();
        if let Some(&threshold) = drop_after.get(&path) {
            let served = match path.as_str() {
                "translate" => state.translate_calls.load(Ordering::SeqCst),
                "embed" => state.embed_calls.load(Ordering::SeqCst),
                "ner" => state.ner_calls.load(Ordering::SeqCst),
                _ => 0,
            };
            if served >= threshold {
                // close without responding
                return Ok(());
            }
        }
    }
    match path.as_str() {
        "translate" => state.translate_calls.fetch_add(1, Ordering::SeqCst),
        "embed" => state.embed_calls.fetch_add(1, Ordering::SeqCst),
        "ner" => state.ner_calls.fetch_add(1, Ordering::SeqCst),
        _ => 0,
    };

    {
        let mut fail = state.fail_next.lock().unwrap();
        if let Some(n) = fail.get_mut(&path) {
            if *n > 0 {
                *n -= 1;
                return write_response(&mut stream, 500, &json!({"error": "injected failure"}));
            }
        }
    }

    let request: Value = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(_) => return write_response(&mut stream, 400, &json!({"error": "bad json"})),
    };
    let texts: Vec<String> = request
        .get("texts")
        .and_then(Value::as_array)
        .map(|a| {
            a.iter()
                .map(|v| v.as_str().unwrap_or_default().to_owned())
                .collect()
        })
        .unwrap_or_default();

    let response = match path.as_str() {
        "translate" => {
            let table = state.translate_table.lock().unwrap();
            let translations: Vec<String> = texts
                .iter()
                .map(|t| {
                    if table.is_empty() {
                        t.clone()
                    } else {
                        map_whole_tokens(t, &table)
                    }
                })
                .collect();
            json!({ "translations": translations })
        }
        "embed" => {
            let table = state.embed_table.lock().unwrap();
            let vectors: Vec<Vec<f64>> = texts
                .iter()
                .map(|t| match table.get(t) {
                    Some(v) => v.clone(),
                    None => hash_vector(t),
                })
                .collect();
            json!({ "vectors": vectors })
        }
        "ner" => {
            let lookup = state.ner_lookup.lock().unwrap();
            let tags: Vec<Vec<(String, String)>> = texts
                .iter()
                .map(|t| {
                    crate::text::tokenize::tokenize(t)
                        .tokens()
                        .iter()
                        .map(|tok| {
                            let tag = lookup
                                .get(&tok.normalized)
                                .cloned()
                                .unwrap_or_else(|| "O".to_owned());
                            (tok.raw.clone(), tag)
                        })
                        .collect()
                })
                .collect();
            json!({ "tags": tags })
        }
        _ => return write_response(&mut stream, 404, &json!({"error": "unknown path"})),
    };

    write_response(&mut stream, 200, &response)
}

/// Deterministic 8-dim vector derived from the text content; the empty
/// string maps to the zero vector.
fn hash_vector(text: &str) -> Vec<f64> {
    if text.is_empty() {
        return vec![0.0; 8];
    }
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    (0..8)
        .map(|i| {
            // splitmix64 step per component
            let mut z = h.wrapping_add((i as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            (z as f64 / u64::MAX as f64) * 2.0 - 1.0
        })
        .collect()
}

fn read_request(stream: &mut TcpStream) -> std::io::Result<Option<(String, Vec<u8>)>> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    if reader.read_line(&mut request_line)? == 0 {
        return Ok(None);
    }
    let path = request_line
        .split_whitespace()
        .nth(1)
        .unwrap_or("/")
        .to_owned();

    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some(value) = line
            .to_ascii_lowercase()
            .strip_prefix("content-length:")
            .map(str::trim)
            .and_then(|v| v.parse::<usize>().ok())
        {
            content_length = value;
        }
    }

    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    Ok(Some((path, body)))
}

fn write_response(stream: &mut TcpStream, status: u16, body: &Value) -> std::io::Result<()> {
    let body = serde_json::to_vec(body).expect("mock responses serialize");
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        _ => "Internal Server Error",
    };
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    )?;
    stream.write_all(&body)?;
    stream.flush()
}
