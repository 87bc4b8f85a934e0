//! Solver / thinker / embedding backends.
//!
//! Every backend speaks the same completion interface. Handles wrap a backend
//! with a content-addressed response cache, an in-flight limit, and telemetry
//! counters; the cache is consulted before the backend, so enabling it never
//! changes outputs for deterministic backends, only call counts.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mode::DecodingMode;

mod cache;
pub mod embed;
mod http;
mod mock;
mod scripted;

pub mod budget;

pub use cache::{cache_key, CacheStore};
pub use http::{HttpBackend, HttpConfig};
pub use mock::{MockSolver, MockSolverSpec, MockTaskSpec};
pub use scripted::ScriptedBackend;

pub const DEFAULT_MAX_IN_FLIGHT: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub backend_id: String,
    pub model_id: String,
    pub rendered_prompt: String,
    pub temperature: f64,
    pub seed: u64,
    pub max_tokens: u32,
}

impl CompletionRequest {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.rendered_prompt.is_empty() {
            return Err(BackendError::Protocol("empty rendered prompt".into()));
        }
        if self.max_tokens == 0 {
            return Err(BackendError::Protocol("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionReply {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub cached: bool,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend unavailable after {retries} retries: {message}")]
    Unavailable { retries: u32, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("mock solver spec does not cover the task in the prompt")]
    TaskNotCovered,
    #[error("unknown backend id: {0}")]
    UnknownBackend(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Whitespace token count; the unit of budget accounting for backends that
/// do not report usage themselves.
pub fn approx_token_count(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

pub trait Backend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionReply, BackendError>;

    /// Mode-aware completion. Backends that model perturbation sensitivity
    /// (the mock solver) override this; everything else ignores the mode.
    fn complete_with_mode(
        &self,
        request: &CompletionRequest,
        _mode: &DecodingMode,
    ) -> Result<CompletionReply, BackendError> {
        self.complete(request)
    }
}

/// Per-backend counters. `invocations` counts actual backend calls (cache
/// misses); cache hits never reach the backend.
#[derive(Debug, Default)]
pub struct Telemetry {
    pub invocations: AtomicU64,
    pub cache_hits: AtomicU64,
    pub retries: AtomicU64,
}

impl Telemetry {
    pub fn invocations(&self) -> u64 {
        self.invocations.load(Ordering::Relaxed)
    }
    pub fn cache_hits(&self) -> u64 {
        self.cache_hits.load(Ordering::Relaxed)
    }
    pub fn retries(&self) -> u64 {
        self.retries.load(Ordering::Relaxed)
    }
}

/// Counting semaphore bounding concurrent requests per backend.
#[derive(Debug)]
pub struct InflightLimiter {
    capacity: usize,
    state: Mutex<usize>,
    cv: Condvar,
}

impl InflightLimiter {
    pub fn new(capacity: usize) -> Self {
        InflightLimiter {
            capacity: capacity.max(1),
            state: Mutex::new(0),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> InflightGuard<'_> {
        let mut in_flight = self.state.lock().unwrap();
        while *in_flight >= self.capacity {
            in_flight = self.cv.wait(in_flight).unwrap();
        }
        *in_flight += 1;
        InflightGuard { limiter: self }
    }
}

struct InflightGuard<'a> {
    limiter: &'a InflightLimiter,
}

impl Drop for InflightGuard<'_> {
    fn drop(&mut self) {
        let mut in_flight = self.limiter.state.lock().unwrap();
        *in_flight -= 1;
        self.limiter.cv.notify_one();
    }
}

/// A registered backend: id, default model, cache, limiter, telemetry.
pub struct BackendHandle {
    pub id: String,
    pub model_id: String,
    backend: Arc<dyn Backend>,
    cache: Option<Arc<CacheStore>>,
    limiter: InflightLimiter,
    telemetry: Arc<Telemetry>,
}

impl BackendHandle {
    pub fn new(id: impl Into<String>, model_id: impl Into<String>, backend: Arc<dyn Backend>) -> Self {
        BackendHandle {
            id: id.into(),
            model_id: model_id.into(),
            backend,
            cache: None,
            limiter: InflightLimiter::new(DEFAULT_MAX_IN_FLIGHT),
            telemetry: Arc::new(Telemetry::default()),
        }
    }

    pub fn with_cache(mut self, cache: Arc<CacheStore>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_in_flight_limit(mut self, limit: usize) -> Self {
        self.limiter = InflightLimiter::new(limit);
        self
    }

    pub fn telemetry(&self) -> Arc<Telemetry> {
        self.telemetry.clone()
    }

    /// Hand the backend's telemetry to inner components (the HTTP client
    /// counts its own retries there).
    pub fn with_telemetry(mut self, telemetry: Arc<Telemetry>) -> Self {
        self.telemetry = telemetry;
        self
    }

    pub fn request(&self, rendered_prompt: &str, temperature: f64, seed: u64, max_tokens: u32) -> CompletionRequest {
        CompletionRequest {
            backend_id: self.id.clone(),
            model_id: self.model_id.clone(),
            rendered_prompt: rendered_prompt.to_owned(),
            temperature,
            seed,
            max_tokens,
        }
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<CompletionReply, BackendError> {
        let mode = DecodingMode::baseline(request.seed, request.temperature);
        self.complete_with_mode(request, &mode)
    }

    pub fn complete_with_mode(
        &self,
        request: &CompletionRequest,
        mode: &DecodingMode,
    ) -> Result<CompletionReply, BackendError> {
        request.validate()?;
        let key = cache_key(request);
        if let Some(cache) = &self.cache {
            if let Some(mut reply) = cache.get(&key)? {
                reply.cached = true;
                self.telemetry.cache_hits.fetch_add(1, Ordering::Relaxed);
                return Ok(reply);
            }
        }
        let _guard = self.limiter.acquire();
        self.telemetry.invocations.fetch_add(1, Ordering::Relaxed);
        let reply = self.backend.complete_with_mode(request, mode)?;
        if let Some(cache) = &self.cache {
            cache.put(&key, &reply)?;
        }
        Ok(reply)
    }
}

/// Declarative backend configuration, as it appears in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub id: String,
    #[serde(default)]
    pub model_id: Option<String>,
    #[serde(flatten)]
    pub kind: BackendKindConfig,
    #[serde(default)]
    pub max_in_flight: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendKindConfig {
    Mock { spec: MockSolverSpec },
    Http { http: HttpConfig },
    /// Deterministic canned replies, keyed by request seed. Useful as a
    /// thinker or judge in offline scenarios.
    Scripted { replies: Vec<String> },
}

#[derive(Default)]
pub struct BackendRegistry {
    handles: BTreeMap<String, Arc<BackendHandle>>,
}

impl BackendRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, handle: BackendHandle) {
        self.handles.insert(handle.id.clone(), Arc::new(handle));
    }

    pub fn get(&self, id: &str) -> Result<Arc<BackendHandle>, BackendError> {
        self.handles
            .get(id)
            .cloned()
            .ok_or_else(|| BackendError::UnknownBackend(id.to_owned()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.handles.keys().map(String::as_str)
    }

    /// Build a registry from configuration. When a cache store is supplied,
    /// every backend shares it.
    pub fn from_configs(
        configs: &[BackendConfig],
        cache: Option<Arc<CacheStore>>,
    ) -> Result<Self, BackendError> {
        let mut registry = BackendRegistry::new();
        for config in configs {
            let telemetry = Arc::new(Telemetry::default());
            let backend: Arc<dyn Backend> = match &config.kind {
                BackendKindConfig::Mock { spec } => Arc::new(MockSolver::new(spec.clone())),
                BackendKindConfig::Http { http } => {
                    Arc::new(HttpBackend::new(http.clone(), telemetry.clone())?)
                }
                BackendKindConfig::Scripted { replies } => {
                    Arc::new(ScriptedBackend::by_request(replies.clone()))
                }
            };
            let model_id = config.model_id.clone().unwrap_or_else(|| match &config.kind {
                BackendKindConfig::Http { http } => http.model.clone(),
                _ => "mock-model".into(),
            });
            let mut handle = BackendHandle::new(&config.id, model_id, backend).with_telemetry(telemetry);
            if let Some(cache) = cache.clone() {
                handle = handle.with_cache(cache);
            }
            if let Some(limit) = config.max_in_flight {
                handle = handle.with_in_flight_limit(limit);
            }
            registry.register(handle);
        }
        Ok(registry)
    }
}
