//! Backend traits, configuration, and the live HTTP client.

use super::GatewayError;
use crate::util;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::PathBuf;

/// A fully rendered chat request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatRequest {
    pub system: String,
    pub user: String,
    /// Schema the response will be validated against; part of the cache key.
    pub schema_id: String,
}

impl ChatRequest {
    /// Cache/fixture key: digest over model id, rendered prompt pair, and
    /// schema id.
    pub fn digest(&self, model_id: &str) -> String {
        util::digest_parts(&[model_id, &self.system, &self.user, &self.schema_id])
    }
}

/// Chat-completion transport.
pub trait ChatBackend: Send + Sync {
    fn model_id(&self) -> &str;
    /// Return the raw response text for a request.
    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError>;
}

/// Text-embedding transport.
pub trait EmbedBackend: Send + Sync {
    fn model_id(&self) -> &str;
    /// One vector per text, order preserved, uniform dimension.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, GatewayError>;
}

/// Which backend family a gateway talks to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    Mock,
}

/// Mock behaviors: `scripted` replays fixture responses by request digest,
/// `heuristic` fabricates plausible responses from surface cues. Heuristic
/// mode is for demos and is not faithful to any real model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MockMode {
    Scripted,
    #[default]
    Heuristic,
}

pub const DEFAULT_API_KEY_ENV: &str = "ASSEMBLY_LENS_API_KEY";

fn default_api_key_env() -> String {
    DEFAULT_API_KEY_ENV.to_string()
}

fn default_chat_model() -> String {
    "o3-mini".to_string()
}

fn default_embed_model() -> String {
    "text-embedding-3-small".to_string()
}

fn default_max_inflight() -> usize {
    4
}

/// Live endpoint settings. The API key is read from `api_key_env` at call
/// time, never stored in config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiveConfig {
    pub endpoint: String,
    #[serde(default = "default_chat_model")]
    pub chat_model: String,
    #[serde(default = "default_embed_model")]
    pub embed_model: String,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
}

/// Mock settings. Scripted mode requires a readable fixture.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MockConfig {
    #[serde(default)]
    pub mode: MockMode,
    #[serde(default)]
    pub fixture: Option<PathBuf>,
}

/// Complete backend selection for a gateway.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub live: Option<LiveConfig>,
    #[serde(default)]
    pub mock: Option<MockConfig>,
    #[serde(default)]
    pub cache_path: Option<PathBuf>,
    #[serde(default = "default_max_inflight")]
    pub max_inflight: usize,
}

impl BackendConfig {
    pub fn mock_heuristic() -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            live: None,
            mock: Some(MockConfig {
                mode: MockMode::Heuristic,
                fixture: None,
            }),
            cache_path: None,
            max_inflight: default_max_inflight(),
        }
    }

    pub fn mock_scripted(fixture: PathBuf) -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            live: None,
            mock: Some(MockConfig {
                mode: MockMode::Scripted,
                fixture: Some(fixture),
            }),
            cache_path: None,
            max_inflight: default_max_inflight(),
        }
    }

    /// Stable digest of the configuration, recorded in run manifests.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        util::digest_parts(&["backend-config", &json])
    }
}

/// HTTP client for a chat-completions-style JSON endpoint.
pub struct LiveChatBackend {
    config: LiveConfig,
    client: reqwest::blocking::Client,
}

impl LiveChatBackend {
    pub fn new(config: LiveConfig) -> Self {
        Self {
            config,
            client: reqwest::blocking::Client::new(),
        }
    }

    fn api_key(&self) -> Result<String, GatewayError> {
        std::env::var(&self.config.api_key_env)
            .map_err(|_| GatewayError::ApiKeyMissing(self.config.api_key_env.clone()))
    }
}

impl ChatBackend for LiveChatBackend {
    fn model_id(&self) -> &str {
        &self.config.chat_model
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let key = self.api_key()?;
        let url = format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'));
        let body = json!({
            "model": self.config.chat_model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "response_format": {"type": "json_object"},
            "temperature": 0,
        });
        let response = self
            .client
            .post(&url)
            .bearer_auth(key)
            .json(&body)
            .send()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = response.status();
        let payload: serde_json::Value = response
            .json()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(GatewayError::Transport(format!(
                "{url} returned {status}: {payload}"
            )));
        }
        payload["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                GatewayError::Transport(format!("{url}: response missing message content"))
            })
    }
}

/// HTTP client for an embeddings endpoint.
pub struct LiveEmbedBackend {
    config: LiveConfig,
    client: reqwest::blocking::Client,
}

impl LiveEmbedBackend {
    pub fn new(config: LiveConfig) -> Self {
        Self {
            config,
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl EmbedBackend for LiveEmbedBackend {
    fn model_id(&self) -> &str {
        &self.config.embed_model
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, GatewayError> {
        let key = std::env::var(&self.config.api_key_env)
            .map_err(|_| GatewayError::ApiKeyMissing(self.config.api_key_env.clone()))?;
        let url = format!("{}/embeddings", self.config.endpoint.trim_end_matches('/'));
        let body = json!({"model": self.config.embed_model, "input": texts});
        let response = self
            .client
            .post(&url)
            .bearer_auth(key)
            .json(&body)
            .send()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = response.status();
        let payload: serde_json::Value = response
            .json()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(GatewayError::Transport(format!(
                "{url} returned {status}: {payload}"
            )));
        }
        let data = payload["data"]
            .as_array()
            .ok_or_else(|| GatewayError::Transport(format!("{url}: response missing data")))?;
        let mut vectors = vec![Vec::new(); texts.len()];
        for item in data {
            let index = item["index"].as_u64().unwrap_or(u64::MAX) as usize;
            let embedding = item["embedding"]
                .as_array()
                .ok_or_else(|| GatewayError::Transport("missing embedding array".into()))?
                .iter()
                .filter_map(serde_json::Value::as_f64)
                .collect::<Vec<f64>>();
            if index >= vectors.len() {
                return Err(GatewayError::Transport(format!(
                    "embedding index {index} out of range"
                )));
            }
            vectors[index] = embedding;
        }
        if vectors.iter().any(Vec::is_empty) {
            return Err(GatewayError::Transport(
                "embeddings response missing entries".into(),
            ));
        }
        Ok(vectors)
    }
}
