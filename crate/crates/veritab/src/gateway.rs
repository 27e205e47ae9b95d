//! Chat-completion access with retries, rate limiting, and record/replay.
//!
//! Hosted "temperature 0" is best effort only, so determinism comes from the
//! cache: record mode persists every response keyed by a content digest of
//! the request, and replay mode serves exclusively from that store without
//! touching the network. Time is abstracted behind [`Clock`] so backoff and
//! the sliding-window rate limiter are testable with a virtual clock, and
//! response latency is whatever the clock measured (the recorded value on
//! replay), which keeps downstream wall-clock accounting reproducible.

use std::collections::{HashMap, VecDeque};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Fixed pause between retry attempts.
const RETRY_BACKOFF: Duration = Duration::from_secs(2);
/// Width of the rate-limit window.
const RATE_WINDOW: Duration = Duration::from_secs(60);

/// One reachable model endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEndpoint {
    /// Unique id used by bindings and cache keys, e.g. "Qw-235B".
    pub id: String,
    pub base_url: String,
    /// Wire-level model name; defaults to `id` when empty.
    pub model: String,
    /// Environment variable holding the bearer token (live mode only).
    pub auth_env: Option<String>,
    /// Requests per minute; enforced over a sliding window.
    pub rate_limit: u32,
}

impl ModelEndpoint {
    pub fn new(id: impl Into<String>) -> Self {
        ModelEndpoint {
            id: id.into(),
            base_url: String::new(),
            model: String::new(),
            auth_env: None,
            rate_limit: 60,
        }
    }

    fn wire_model(&self) -> &str {
        if self.model.is_empty() {
            &self.id
        } else {
            &self.model
        }
    }
}

/// Generation parameters sent with every request.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_output_tokens: u32,
    /// Per-attempt budget; a slow attempt is cut off and retried.
    pub timeout_seconds: u64,
    pub max_retries: u32,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            temperature: 0.0,
            max_output_tokens: 1500,
            timeout_seconds: 2000,
            max_retries: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageRole {
    System,
    User,
    Assistant,
}

impl MessageRole {
    fn as_str(&self) -> &'static str {
        match self {
            MessageRole::System => "system",
            MessageRole::User => "user",
            MessageRole::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: MessageRole,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: MessageRole::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: MessageRole::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: MessageRole::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    /// Endpoint id, resolved against the gateway's registry.
    pub endpoint: String,
    pub messages: Vec<ChatMessage>,
    pub params: GenerationParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    pub content: String,
    pub attempts: u32,
    pub latency: Duration,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("unknown endpoint {0:?}")]
    EndpointUnknown(String),
    #[error("request timed out after {attempts} attempts")]
    Timeout { attempts: u32 },
    #[error("all {attempts} attempts failed; last cause: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("replay cache has no entry for digest {digest}")]
    CacheMiss { digest: String },
    #[error("cache store error: {0}")]
    Store(String),
}

// ---------------------------------------------------------------------------
// Clocks

/// Time source for rate limiting, backoff, and latency measurement.
pub trait Clock: Send + Sync {
    /// Monotonic time since the clock's origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

/// Real time.
pub struct SystemClock {
    start: std::time::Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock {
            start: std::time::Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.start.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Manually advanced time; `sleep` advances instantly.
pub struct VirtualClock {
    now: Mutex<Duration>,
}

impl VirtualClock {
    pub fn new() -> Self {
        VirtualClock {
            now: Mutex::new(Duration::ZERO),
        }
    }

    pub fn advance(&self, d: Duration) {
        *self.now.lock().unwrap() += d;
    }
}

impl Default for VirtualClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> Duration {
        *self.now.lock().unwrap()
    }

    fn sleep(&self, d: Duration) {
        self.advance(d);
    }
}

// ---------------------------------------------------------------------------
// Backends

/// A single delivery attempt's failure.
#[derive(Debug, Clone)]
pub struct AttemptError {
    pub timed_out: bool,
    pub message: String,
}

/// One network (or scripted) delivery attempt. Retries live above this.
pub trait ChatBackend: Send + Sync {
    fn send(&self, endpoint: &ModelEndpoint, request: &ChatRequest) -> Result<String, AttemptError>;
}

/// One scripted backend step.
#[derive(Debug, Clone)]
pub enum ScriptStep {
    Reply(String),
    Fail(String),
    TimeoutFail,
}

/// Serves queued steps in order regardless of request content; an exhausted
/// script fails every further attempt.
pub struct ScriptedBackend {
    steps: Mutex<VecDeque<ScriptStep>>,
}

impl ScriptedBackend {
    pub fn new(steps: Vec<ScriptStep>) -> Self {
        ScriptedBackend {
            steps: Mutex::new(steps.into()),
        }
    }

    /// Convenience: a script of plain replies.
    pub fn replies(texts: Vec<String>) -> Self {
        Self::new(texts.into_iter().map(ScriptStep::Reply).collect())
    }
}

impl ChatBackend for ScriptedBackend {
    fn send(&self, _endpoint: &ModelEndpoint, _request: &ChatRequest) -> Result<String, AttemptError> {
        match self.steps.lock().unwrap().pop_front() {
            Some(ScriptStep::Reply(text)) => Ok(text),
            Some(ScriptStep::Fail(message)) => Err(AttemptError {
                timed_out: false,
                message,
            }),
            Some(ScriptStep::TimeoutFail) => Err(AttemptError {
                timed_out: true,
                message: "scripted timeout".into(),
            }),
            None => Err(AttemptError {
                timed_out: false,
                message: "script exhausted".into(),
            }),
        }
    }
}

/// Provider-standard chat-completion over HTTPS.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new() -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| GatewayError::Store(format!("http client: {e}")))?;
        Ok(HttpBackend { client })
    }
}

impl ChatBackend for HttpBackend {
    fn send(&self, endpoint: &ModelEndpoint, request: &ChatRequest) -> Result<String, AttemptError> {
        let fail = |message: String| AttemptError {
            timed_out: false,
            message,
        };
        let url = if endpoint.base_url.ends_with("/chat/completions") {
            endpoint.base_url.clone()
        } else {
            format!("{}/chat/completions", endpoint.base_url.trim_end_matches('/'))
        };
        let messages: Vec<serde_json::Value> = request
            .messages
            .iter()
            .map(|m| serde_json::json!({ "role": m.role.as_str(), "content": m.content }))
            .collect();
        let body = serde_json::json!({
            "model": endpoint.wire_model(),
            "messages": messages,
            "temperature": request.params.temperature,
            "max_tokens": request.params.max_output_tokens,
        });
        let mut builder = self
            .client
            .post(url)
            .timeout(Duration::from_secs(request.params.timeout_seconds))
            .json(&body);
        if let Some(var) = &endpoint.auth_env {
            let token = std::env::var(var)
                .map_err(|_| fail(format!("auth variable {var} is not set")))?;
            builder = builder.bearer_auth(token);
        }
        let response = builder.send().map_err(|e| AttemptError {
            timed_out: e.is_timeout(),
            message: e.to_string(),
        })?;
        let status = response.status();
        let text = response.text().map_err(|e| AttemptError {
            timed_out: e.is_timeout(),
            message: e.to_string(),
        })?;
        if !status.is_success() {
            return Err(fail(format!("http {status}: {text}")));
        }
        let parsed: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| fail(format!("bad response json: {e}")))?;
        parsed["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| fail("response carries no message content".into()))
    }
}

// ---------------------------------------------------------------------------
// Cache store

/// One recorded exchange: the verbatim request and response plus metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheEntry {
    pub endpoint: String,
    pub messages: Vec<ChatMessage>,
    pub content: String,
    pub attempts: u32,
    pub latency_ms: u64,
}

/// Content-addressed directory: one JSON file per request digest.
pub struct CacheStore {
    dir: PathBuf,
}

impl CacheStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, GatewayError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)
            .map_err(|e| GatewayError::Store(format!("create {}: {e}", dir.display())))?;
        Ok(CacheStore { dir })
    }

    fn path(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }

    pub fn get(&self, digest: &str) -> Result<Option<CacheEntry>, GatewayError> {
        let path = self.path(digest);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(GatewayError::Store(format!("read {}: {e}", path.display()))),
        };
        let entry = serde_json::from_slice(&bytes)
            .map_err(|e| GatewayError::Store(format!("parse {}: {e}", path.display())))?;
        Ok(Some(entry))
    }

    pub fn put(&self, digest: &str, entry: &CacheEntry) -> Result<(), GatewayError> {
        let bytes = serde_json::to_vec_pretty(entry)
            .map_err(|e| GatewayError::Store(format!("encode entry: {e}")))?;
        let tmp = self.dir.join(format!(".{digest}.tmp"));
        let path = self.path(digest);
        std::fs::write(&tmp, bytes)
            .map_err(|e| GatewayError::Store(format!("write {}: {e}", tmp.display())))?;
        std::fs::rename(&tmp, &path)
            .map_err(|e| GatewayError::Store(format!("rename {}: {e}", path.display())))?;
        Ok(())
    }

    pub fn len(&self) -> Result<usize, GatewayError> {
        let entries = std::fs::read_dir(&self.dir)
            .map_err(|e| GatewayError::Store(format!("list {}: {e}", self.dir.display())))?;
        let mut n = 0;
        for entry in entries {
            let entry = entry.map_err(|e| GatewayError::Store(e.to_string()))?;
            if entry.path().extension().is_some_and(|ext| ext == "json") {
                n += 1;
            }
        }
        Ok(n)
    }

    pub fn is_empty(&self) -> Result<bool, GatewayError> {
        Ok(self.len()? == 0)
    }
}

/// Stable content digest of a request.
///
/// Message content is canonicalized first (CRLF to LF, trailing whitespace
/// trimmed per message) so equivalent requests share a digest across
/// platforms.
pub fn cache_key(request: &ChatRequest) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"endpoint\0");
    hasher.update(request.endpoint.as_bytes());
    hasher.update(b"\nparams\0");
    hasher.update(format!("{:?}", request.params.temperature).as_bytes());
    hasher.update(b"\0");
    hasher.update(request.params.max_output_tokens.to_string().as_bytes());
    hasher.update(b"\0");
    hasher.update(request.params.timeout_seconds.to_string().as_bytes());
    hasher.update(b"\0");
    hasher.update(request.params.max_retries.to_string().as_bytes());
    for message in &request.messages {
        hasher.update(b"\nmsg\0");
        hasher.update(message.role.as_str().as_bytes());
        hasher.update(b"\0");
        hasher.update(canonicalize(&message.content).as_bytes());
    }
    hex::encode(hasher.finalize())
}

fn canonicalize(content: &str) -> String {
    content.replace("\r\n", "\n").trim_end().to_string()
}

// ---------------------------------------------------------------------------
// Gateway

/// Whether requests hit the network and whether the cache is read or written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Live,
    Record,
    Replay,
}

struct RateLimiter {
    recent: Mutex<HashMap<String, VecDeque<Duration>>>,
}

impl RateLimiter {
    fn new() -> Self {
        RateLimiter {
            recent: Mutex::new(HashMap::new()),
        }
    }

    /// Blocks (via the clock) until a request slot is free, then claims it.
    fn acquire(&self, endpoint: &str, limit: u32, clock: &dyn Clock) {
        loop {
            let wait = {
                let mut map = self.recent.lock().unwrap();
                let queue = map.entry(endpoint.to_string()).or_default();
                let now = clock.now();
                while queue
                    .front()
                    .is_some_and(|&t| now.saturating_sub(t) >= RATE_WINDOW)
                {
                    queue.pop_front();
                }
                if (queue.len() as u32) < limit {
                    queue.push_back(now);
                    return;
                }
                *queue.front().expect("nonempty at limit") + RATE_WINDOW - now
            };
            clock.sleep(wait);
        }
    }
}

/// Uniform access to all endpoints, in one of three modes.
pub struct Gateway {
    endpoints: HashMap<String, ModelEndpoint>,
    backend: Box<dyn ChatBackend>,
    clock: Arc<dyn Clock>,
    mode: Mode,
    store: Option<CacheStore>,
    limiter: RateLimiter,
}

impl Gateway {
    /// A live gateway over the given backend. Most callers want [`Gateway::http`]
    /// or [`Gateway::scripted`] plus [`Gateway::with_replay`].
    pub fn new(
        endpoints: Vec<ModelEndpoint>,
        backend: Box<dyn ChatBackend>,
        clock: Arc<dyn Clock>,
    ) -> Self {
        Gateway {
            endpoints: endpoints.into_iter().map(|e| (e.id.clone(), e)).collect(),
            backend,
            clock,
            mode: Mode::Live,
            store: None,
            limiter: RateLimiter::new(),
        }
    }

    /// Live HTTP gateway with real time.
    pub fn http(endpoints: Vec<ModelEndpoint>) -> Result<Self, GatewayError> {
        Ok(Self::new(
            endpoints,
            Box::new(HttpBackend::new()?),
            Arc::new(SystemClock::new()),
        ))
    }

    /// Scripted gateway with virtual time, for tests and offline demos.
    pub fn scripted(endpoints: Vec<ModelEndpoint>, steps: Vec<ScriptStep>) -> Self {
        Self::new(
            endpoints,
            Box::new(ScriptedBackend::new(steps)),
            Arc::new(VirtualClock::new()),
        )
    }

    /// Attaches a cache store and switches mode. Replay never touches the
    /// backend; record persists every successful response.
    pub fn with_replay(mut self, dir: impl Into<PathBuf>, mode: Mode) -> Result<Self, GatewayError> {
        self.mode = mode;
        self.store = match mode {
            Mode::Live => None,
            Mode::Record | Mode::Replay => Some(CacheStore::open(dir)?),
        };
        Ok(self)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn has_endpoint(&self, id: &str) -> bool {
        self.endpoints.contains_key(id)
    }

    /// Sends one chat request under the configured mode, retrying failed
    /// attempts up to `max_retries` with a fixed pause between attempts.
    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let endpoint = self
            .endpoints
            .get(&request.endpoint)
            .ok_or_else(|| GatewayError::EndpointUnknown(request.endpoint.clone()))?;
        let digest = cache_key(request);
        if self.mode == Mode::Replay {
            let store = self.store.as_ref().expect("replay mode has a store");
            let entry = store
                .get(&digest)?
                .ok_or(GatewayError::CacheMiss { digest })?;
            return Ok(ChatResponse {
                content: entry.content,
                attempts: entry.attempts,
                latency: Duration::from_millis(entry.latency_ms),
            });
        }
        let started = self.clock.now();
        let max_attempts = request.params.max_retries + 1;
        let mut last: Option<AttemptError> = None;
        for attempt in 1..=max_attempts {
            self.limiter
                .acquire(&endpoint.id, endpoint.rate_limit.max(1), &*self.clock);
            match self.backend.send(endpoint, request) {
                Ok(content) => {
                    let latency = self.clock.now().saturating_sub(started);
                    if let Some(store) = &self.store {
                        store.put(
                            &digest,
                            &CacheEntry {
                                endpoint: endpoint.id.clone(),
                                messages: request.messages.clone(),
                                content: content.clone(),
                                attempts: attempt,
                                latency_ms: latency.as_millis() as u64,
                            },
                        )?;
                    }
                    return Ok(ChatResponse {
                        content,
                        attempts: attempt,
                        latency,
                    });
                }
                Err(err) => {
                    last = Some(err);
                    if attempt < max_attempts {
                        self.clock.sleep(RETRY_BACKOFF);
                    }
                }
            }
        }
        let last = last.expect("at least one attempt ran");
        if last.timed_out {
            Err(GatewayError::Timeout {
                attempts: max_attempts,
            })
        } else {
            Err(GatewayError::Exhausted {
                attempts: max_attempts,
                last: last.message,
            })
        }
    }
}
