//! Provider-agnostic chat-completion and embedding gateway.
//!
//! Structured calls render a prompt, hit the backend, parse and validate the
//! response against a [`SchemaDescriptor`], and retry the identical request
//! on validation failure up to the policy bound. Successful raw responses are
//! cached append-only, keyed by `digest(model_id, rendered prompt,
//! schema_id)`, so a repeated request performs zero backend calls. Batches
//! run through a bounded worker pool and are reassembled strictly in
//! submission order.

mod backend;
mod cache;
mod mock;
pub mod schema;
mod template;

pub use backend::{
    BackendConfig, BackendKind, ChatBackend, ChatRequest, EmbedBackend, LiveChatBackend,
    LiveConfig, LiveEmbedBackend, MockConfig, MockMode, DEFAULT_API_KEY_ENV,
};
pub use cache::{CacheEntry, ResponseCache};
pub use mock::{
    mock_embedding, MockChatBackend, MockEmbedBackend, MockScript, RecordingChatBackend,
    ScriptEntry, MOCK_CHAT_MODEL, MOCK_EMBED_DIM, MOCK_EMBED_MODEL,
};
pub use schema::{SchemaDescriptor, SchemaRegistry, Violation};
pub use template::{render_text, schema_for_template, PromptTemplate, TemplateRegistry};

use crate::corpus::SpeakerTurn;
use crate::util::{self, Clock};
use serde_json::Value;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("missing binding for placeholder {{{0}}}")]
    MissingBinding(String),
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("unknown schema {0:?}")]
    UnknownSchema(String),
    #[error("validation exhausted after {attempts} attempts ({context}): {last_violation}")]
    ValidationExhausted {
        attempts: u32,
        last_violation: String,
        context: String,
    },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("fixture miss for request digest {digest} ({context})")]
    FixtureMiss { digest: String, context: String },
    #[error("blank text at index {0}")]
    BlankText(usize),
    #[error("input text list is empty")]
    EmptyInput,
    #[error("API key environment variable {0} is not set")]
    ApiKeyMissing(String),
    #[error("cache error: {0}")]
    Cache(String),
    #[error("gateway config error: {0}")]
    Config(String),
}

impl GatewayError {
    pub fn is_transport(&self) -> bool {
        matches!(self, GatewayError::Transport(_))
    }
}

/// Retry bounds for one structured call.
#[derive(Debug, Clone)]
pub struct ValidationPolicy {
    /// Re-issues after the first attempt; total attempts are `max_retries + 1`.
    pub max_retries: u32,
    /// Required list length for batch schemas.
    pub expected_length: Option<usize>,
}

impl Default for ValidationPolicy {
    fn default() -> Self {
        Self {
            max_retries: 2,
            expected_length: None,
        }
    }
}

impl ValidationPolicy {
    pub fn exact_length(len: usize) -> Self {
        Self {
            max_retries: 2,
            expected_length: Some(len),
        }
    }

    pub fn with_max_retries(mut self, max_retries: u32) -> Self {
        self.max_retries = max_retries;
        self
    }
}

/// Result of a structured call.
#[derive(Debug, Clone)]
pub struct StructuredCompletion {
    pub value: Value,
    /// Backend attempts made for this call; 0 on a cache hit.
    pub attempts: u32,
    pub raw: String,
    pub from_cache: bool,
}

/// Result of a free-text call.
#[derive(Debug, Clone)]
pub struct TextCompletion {
    pub text: String,
    pub from_cache: bool,
}

/// Counter snapshot for manifests and cache-coherence tests.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct GatewayStats {
    pub backend_calls: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub attempts_total: u64,
    pub embed_calls: u64,
}

/// Shared LLM access point. Safe to share across threads.
pub struct Gateway {
    chat: Box<dyn ChatBackend>,
    embed: Box<dyn EmbedBackend>,
    cache: Mutex<ResponseCache>,
    templates: TemplateRegistry,
    schemas: SchemaRegistry,
    max_inflight: usize,
    clock: Clock,
    backend_calls: AtomicU64,
    cache_hits: AtomicU64,
    cache_misses: AtomicU64,
    attempts_total: AtomicU64,
    embed_calls: AtomicU64,
}

impl Gateway {
    pub fn from_config(config: &BackendConfig) -> Result<Self, GatewayError> {
        let (chat, embed, clock): (Box<dyn ChatBackend>, Box<dyn EmbedBackend>, Clock) =
            match config.kind {
                BackendKind::Live => {
                    let live = config.live.clone().ok_or_else(|| {
                        GatewayError::Config("backend kind is live but no live config given".into())
                    })?;
                    (
                        Box::new(LiveChatBackend::new(live.clone())),
                        Box::new(backend::LiveEmbedBackend::new(live)),
                        Clock::Wall,
                    )
                }
                BackendKind::Mock => {
                    let mock = config.mock.clone().unwrap_or_default();
                    let chat: Box<dyn ChatBackend> = match mock.mode {
                        MockMode::Heuristic => Box::new(MockChatBackend::heuristic()),
                        MockMode::Scripted => {
                            let fixture = mock.fixture.as_ref().ok_or_else(|| {
                                GatewayError::Config(
                                    "scripted mock requires a fixture path".into(),
                                )
                            })?;
                            let script = MockScript::from_path(fixture)?;
                            Box::new(MockChatBackend::scripted(&script))
                        }
                    };
                    (chat, Box::new(MockEmbedBackend), Clock::Fixed(0))
                }
            };
        let cache = match &config.cache_path {
            Some(path) => ResponseCache::open(path)?,
            None => ResponseCache::ephemeral(),
        };
        Ok(Self::new(chat, embed, cache, config.max_inflight, clock))
    }

    pub fn new(
        chat: Box<dyn ChatBackend>,
        embed: Box<dyn EmbedBackend>,
        cache: ResponseCache,
        max_inflight: usize,
        clock: Clock,
    ) -> Self {
        Self {
            chat,
            embed,
            cache: Mutex::new(cache),
            templates: TemplateRegistry::builtin(),
            schemas: SchemaRegistry::builtin(),
            max_inflight: max_inflight.max(1),
            clock,
            backend_calls: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
            cache_misses: AtomicU64::new(0),
            attempts_total: AtomicU64::new(0),
            embed_calls: AtomicU64::new(0),
        }
    }

    pub fn templates(&self) -> &TemplateRegistry {
        &self.templates
    }

    pub fn schemas(&self) -> &SchemaRegistry {
        &self.schemas
    }

    pub fn chat_model_id(&self) -> &str {
        self.chat.model_id()
    }

    pub fn embed_model_id(&self) -> &str {
        self.embed.model_id()
    }

    pub fn stats(&self) -> GatewayStats {
        GatewayStats {
            backend_calls: self.backend_calls.load(Ordering::SeqCst),
            cache_hits: self.cache_hits.load(Ordering::SeqCst),
            cache_misses: self.cache_misses.load(Ordering::SeqCst),
            attempts_total: self.attempts_total.load(Ordering::SeqCst),
            embed_calls: self.embed_calls.load(Ordering::SeqCst),
        }
    }

    /// Issue one structured request: validate, retry identically on failure,
    /// cache the raw response on success.
    pub fn complete_structured(
        &self,
        request: &ChatRequest,
        schema: &SchemaDescriptor,
        policy: &ValidationPolicy,
    ) -> Result<StructuredCompletion, GatewayError> {
        let key = request.digest(self.chat.model_id());
        {
            let cache = self.cache.lock().expect("cache poisoned");
            if let Some(entry) = cache.get(&key) {
                self.cache_hits.fetch_add(1, Ordering::SeqCst);
                let value = schema::extract_json(&entry.raw)
                    .map_err(|v| GatewayError::Cache(format!("cached response invalid: {v}")))?;
                schema
                    .validate(&value, policy.expected_length)
                    .map_err(|v| GatewayError::Cache(format!("cached response invalid: {v}")))?;
                return Ok(StructuredCompletion {
                    value,
                    attempts: 0,
                    raw: entry.raw.clone(),
                    from_cache: true,
                });
            }
        }
        self.cache_misses.fetch_add(1, Ordering::SeqCst);

        let mut last_violation = Violation("no attempts made".into());
        let total_attempts = policy.max_retries + 1;
        for attempt in 1..=total_attempts {
            self.backend_calls.fetch_add(1, Ordering::SeqCst);
            self.attempts_total.fetch_add(1, Ordering::SeqCst);
            let raw = self.chat.complete(request)?;
            let outcome = schema::extract_json(&raw)
                .and_then(|value| schema.validate(&value, policy.expected_length).map(|()| value));
            match outcome {
                Ok(value) => {
                    let entry = CacheEntry {
                        key: key.clone(),
                        raw: raw.clone(),
                        timestamp: self.clock.timestamp_rfc3339(),
                        attempts: attempt,
                    };
                    self.cache
                        .lock()
                        .expect("cache poisoned")
                        .insert(entry)?;
                    return Ok(StructuredCompletion {
                        value,
                        attempts: attempt,
                        raw,
                        from_cache: false,
                    });
                }
                Err(violation) => last_violation = violation,
            }
        }
        Err(GatewayError::ValidationExhausted {
            attempts: total_attempts,
            last_violation: last_violation.0,
            context: first_line_of(&request.user),
        })
    }

    /// Structured requests over a bounded worker pool. Results come back in
    /// submission order regardless of completion order.
    pub fn complete_structured_batch(
        &self,
        requests: &[(ChatRequest, ValidationPolicy)],
        schema: &SchemaDescriptor,
    ) -> Vec<Result<StructuredCompletion, GatewayError>> {
        if requests.is_empty() {
            return Vec::new();
        }
        let results: Vec<Mutex<Option<Result<StructuredCompletion, GatewayError>>>> =
            requests.iter().map(|_| Mutex::new(None)).collect();
        let cursor = AtomicUsize::new(0);
        let workers = self.max_inflight.min(requests.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = cursor.fetch_add(1, Ordering::SeqCst);
                    if i >= requests.len() {
                        break;
                    }
                    let (request, policy) = &requests[i];
                    let result = self.complete_structured(request, schema, policy);
                    *results[i].lock().expect("result slot poisoned") = Some(result);
                });
            }
        });
        results
            .into_iter()
            .map(|slot| {
                slot.into_inner()
                    .expect("result slot poisoned")
                    .expect("every slot filled by a worker")
            })
            .collect()
    }

    /// Free-text completion (no schema validation), still cached.
    pub fn complete_text(&self, request: &ChatRequest) -> Result<TextCompletion, GatewayError> {
        let key = request.digest(self.chat.model_id());
        {
            let cache = self.cache.lock().expect("cache poisoned");
            if let Some(entry) = cache.get(&key) {
                self.cache_hits.fetch_add(1, Ordering::SeqCst);
                return Ok(TextCompletion {
                    text: entry.raw.clone(),
                    from_cache: true,
                });
            }
        }
        self.cache_misses.fetch_add(1, Ordering::SeqCst);
        self.backend_calls.fetch_add(1, Ordering::SeqCst);
        self.attempts_total.fetch_add(1, Ordering::SeqCst);
        let raw = self.chat.complete(request)?;
        self.cache.lock().expect("cache poisoned").insert(CacheEntry {
            key,
            raw: raw.clone(),
            timestamp: self.clock.timestamp_rfc3339(),
            attempts: 1,
        })?;
        Ok(TextCompletion {
            text: raw,
            from_cache: false,
        })
    }

    /// Embed texts in order. Rejects empty input and blank entries.
    pub fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, GatewayError> {
        if texts.is_empty() {
            return Err(GatewayError::EmptyInput);
        }
        if let Some(i) = texts.iter().position(|t| t.trim().is_empty()) {
            return Err(GatewayError::BlankText(i));
        }
        self.embed_calls.fetch_add(1, Ordering::SeqCst);
        let vectors = self.embed.embed(texts)?;
        debug_assert_eq!(vectors.len(), texts.len());
        Ok(vectors)
    }
}

fn first_line_of(s: &str) -> String {
    s.lines().next().unwrap_or_default().to_string()
}

/// Format the turns a window evaluates, one numbered line each. Whitespace
/// inside utterances is collapsed so each turn stays on one line.
pub fn format_current_block(turns: &[SpeakerTurn]) -> String {
    turns
        .iter()
        .enumerate()
        .map(|(i, t)| {
            format!(
                "[{}] {} ({}): {}",
                i + 1,
                t.speaker_id,
                t.role.as_str(),
                util::collapse_whitespace(&t.text)
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Format preceding-context turns as a plain bulleted block.
pub fn format_context_block(turns: &[SpeakerTurn]) -> String {
    if turns.is_empty() {
        return "(none)".to_string();
    }
    turns
        .iter()
        .map(|t| {
            format!(
                "- {} ({}): {}",
                t.speaker_id,
                t.role.as_str(),
                util::collapse_whitespace(&t.text)
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn suggestion_schema(gateway: &Gateway) -> SchemaDescriptor {
        gateway
            .schemas()
            .get(schema::SUGGESTION_BATCH_SCHEMA_ID)
            .unwrap()
            .clone()
    }

    fn batch_response(n: usize) -> String {
        let items: Vec<_> = (0..n)
            .map(|i| json!({"user_id": format!("d{i:02}"), "quote": "", "suggestion": ""}))
            .collect();
        serde_json::to_string(&json!({ "suggestions": items })).unwrap()
    }

    fn scripted_gateway(responses: Vec<String>, request: &ChatRequest) -> Gateway {
        let mut script = MockScript::new();
        let key = request.digest(MOCK_CHAT_MODEL);
        script.add(&key, None, responses);
        Gateway::new(
            Box::new(MockChatBackend::scripted(&script)),
            Box::new(MockEmbedBackend),
            ResponseCache::ephemeral(),
            4,
            Clock::Fixed(0),
        )
    }

    fn request() -> ChatRequest {
        ChatRequest {
            system: "sys".into(),
            user: "user".into(),
            schema_id: schema::SUGGESTION_BATCH_SCHEMA_ID.into(),
        }
    }

    #[test]
    fn invalid_then_valid_succeeds_with_two_attempts() {
        let req = request();
        let gateway = scripted_gateway(vec![batch_response(9), batch_response(10)], &req);
        let schema = suggestion_schema(&gateway);
        let result = gateway
            .complete_structured(&req, &schema, &ValidationPolicy::exact_length(10))
            .unwrap();
        assert_eq!(result.attempts, 2);
        assert!(!result.from_cache);
    }

    #[test]
    fn three_invalid_responses_exhaust_two_retries() {
        let req = request();
        let gateway = scripted_gateway(
            vec![batch_response(9), batch_response(8), batch_response(7)],
            &req,
        );
        let schema = suggestion_schema(&gateway);
        let err = gateway
            .complete_structured(&req, &schema, &ValidationPolicy::exact_length(10))
            .unwrap_err();
        match err {
            GatewayError::ValidationExhausted {
                attempts,
                last_violation,
                ..
            } => {
                assert_eq!(attempts, 3);
                assert_eq!(last_violation, "Expected 10 classifications, got 7");
            }
            other => panic!("expected ValidationExhausted, got {other:?}"),
        }
    }

    #[test]
    fn second_identical_call_hits_cache_with_zero_backend_calls() {
        let req = request();
        let gateway = scripted_gateway(vec![batch_response(10)], &req);
        let schema = suggestion_schema(&gateway);
        let policy = ValidationPolicy::exact_length(10);
        let first = gateway.complete_structured(&req, &schema, &policy).unwrap();
        assert_eq!(gateway.stats().backend_calls, 1);
        let second = gateway.complete_structured(&req, &schema, &policy).unwrap();
        assert_eq!(gateway.stats().backend_calls, 1, "no extra backend call");
        assert!(second.from_cache);
        assert_eq!(second.attempts, 0);
        assert_eq!(first.raw, second.raw);
        assert_eq!(gateway.stats().cache_hits, 1);
    }

    #[test]
    fn batch_results_come_back_in_submission_order() {
        let mut script = MockScript::new();
        let mut requests = Vec::new();
        for i in 0..10 {
            let req = ChatRequest {
                system: "sys".into(),
                user: format!("user {i}"),
                schema_id: schema::SUGGESTION_BATCH_SCHEMA_ID.into(),
            };
            let response = serde_json::to_string(&json!({"suggestions": [
                {"user_id": format!("d{i:02}"), "quote": "", "suggestion": ""}
            ]}))
            .unwrap();
            script.add(&req.digest(MOCK_CHAT_MODEL), None, vec![response]);
            requests.push((req, ValidationPolicy::exact_length(1)));
        }
        let gateway = Gateway::new(
            Box::new(MockChatBackend::scripted(&script)),
            Box::new(MockEmbedBackend),
            ResponseCache::ephemeral(),
            4,
            Clock::Fixed(0),
        );
        let schema = suggestion_schema(&gateway);
        let results = gateway.complete_structured_batch(&requests, &schema);
        for (i, result) in results.iter().enumerate() {
            let value = &result.as_ref().unwrap().value;
            assert_eq!(
                value["suggestions"][0]["user_id"],
                format!("d{i:02}"),
                "slot {i} out of order"
            );
        }
    }

    #[test]
    fn embed_rejects_empty_and_blank_inputs() {
        let gateway = Gateway::new(
            Box::new(MockChatBackend::heuristic()),
            Box::new(MockEmbedBackend),
            ResponseCache::ephemeral(),
            4,
            Clock::Fixed(0),
        );
        assert!(matches!(
            gateway.embed_texts(&[]),
            Err(GatewayError::EmptyInput)
        ));
        assert!(matches!(
            gateway.embed_texts(&["ok".into(), "  ".into()]),
            Err(GatewayError::BlankText(1))
        ));
    }

    #[test]
    fn identical_texts_embed_identically() {
        let gateway = Gateway::from_config(&BackendConfig::mock_heuristic()).unwrap();
        let v = gateway
            .embed_texts(&["solar panels".into(), "solar panels".into()])
            .unwrap();
        assert_eq!(v[0], v[1]);
        let dot: f64 = v[0].iter().zip(&v[1]).map(|(a, b)| a * b).sum();
        assert!((dot - 1.0).abs() < 1e-12);
    }
}
