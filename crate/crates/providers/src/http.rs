//! JSON-over-HTTP adapters for hosted providers.
//!
//! Every adapter shares an [`HttpTransport`]: bearer auth from an environment
//! variable, bounded parallelism, exponential backoff on 429/5xx/connect
//! failures and one overall deadline per call.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use serde::Deserialize;
use serde_json::{json, Value};
use soundstage_core::Embedding;
use tokio::sync::Semaphore;

use crate::capabilities::{Capability, ProviderCapabilities};
use crate::error::{ProviderError, Result};
use crate::request::{Clip, LlmRequest, MusicRequest};
use crate::{EmbeddingProvider, ImageProvider, LlmProvider, MusicProvider};

/// `SOUNDSTAGE_<PROVIDER>_API_KEY`, with the provider name upper-cased and
/// non-alphanumerics turned into underscores.
pub fn api_key_env_name(provider: &str) -> String {
    let p: String = provider
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' })
        .collect();
    format!("SOUNDSTAGE_{p}_API_KEY")
}

#[derive(Clone, Debug)]
pub struct HttpConfig {
    pub endpoint: String,
    pub api_key_env: String,
    /// Deadline for a whole call, retries included.
    pub timeout: Duration,
    pub parallelism: usize,
    pub max_retries: u32,
    pub backoff: Duration,
    pub capabilities: ProviderCapabilities,
}

impl HttpConfig {
    pub fn new(provider: &str, endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key_env: api_key_env_name(provider),
            timeout: Duration::from_secs(120),
            parallelism: 6,
            max_retries: 3,
            backoff: Duration::from_millis(500),
            capabilities: ProviderCapabilities::NONE,
        }
    }
}

pub struct HttpTransport {
    client: reqwest::Client,
    config: HttpConfig,
    permits: Semaphore,
    retries: AtomicU64,
}

#[derive(Deserialize)]
struct ErrorBody {
    #[serde(default)]
    code: String,
    #[serde(default)]
    message: String,
}

enum Attempt {
    Done(Value),
    Retry(ProviderError),
}

impl HttpTransport {
    pub fn new(config: HttpConfig) -> Result<Self> {
        let client = reqwest::Client::builder()
            .connect_timeout(config.timeout.min(Duration::from_secs(10)))
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let permits = Semaphore::new(config.parallelism.max(1));
        Ok(Self { client, config, permits, retries: AtomicU64::new(0) })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    /// Retries performed so far, over all calls.
    pub fn retries(&self) -> u64 {
        self.retries.load(Ordering::Relaxed)
    }

    fn api_key(&self) -> Result<String> {
        std::env::var(&self.config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| ProviderError::Auth(format!("{} is not set", self.config.api_key_env)))
    }

    pub async fn post(&self, path: &str, body: &Value) -> Result<Value> {
        let key = self.api_key()?;
        let deadline = self.config.timeout;
        match tokio::time::timeout(deadline, self.post_with_retries(path, body, &key)).await {
            Ok(r) => r,
            Err(_) => Err(ProviderError::Timeout(deadline)),
        }
    }

    async fn post_with_retries(&self, path: &str, body: &Value, key: &str) -> Result<Value> {
        let _permit = self
            .permits
            .acquire()
            .await
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let url = format!("{}{}", self.config.endpoint.trim_end_matches('/'), path);
        let mut attempt = 0u32;
        loop {
            match self.attempt(&url, body, key).await? {
                Attempt::Done(v) => return Ok(v),
                Attempt::Retry(err) if attempt < self.config.max_retries => {
                    let wait = self.config.backoff.saturating_mul(1 << attempt.min(16));
                    tracing::warn!(%url, attempt, ?wait, error = %err, "retrying provider call");
                    self.retries.fetch_add(1, Ordering::Relaxed);
                    tokio::time::sleep(wait).await;
                    attempt += 1;
                }
                Attempt::Retry(err) => return Err(err),
            }
        }
    }

    async fn attempt(&self, url: &str, body: &Value, key: &str) -> Result<Attempt> {
        let response = match self.client.post(url).bearer_auth(key).json(body).send().await {
            Ok(r) => r,
            Err(e) if e.is_connect() || e.is_timeout() => {
                return Ok(Attempt::Retry(ProviderError::Transient(e.to_string())))
            }
            Err(e) => return Err(ProviderError::Transport(e.to_string())),
        };
        let status = response.status();
        let text = response
            .text()
            .await
            .map_err(|e| ProviderError::Transient(e.to_string()));
        let text = match text {
            Ok(t) => t,
            Err(e) => return Ok(Attempt::Retry(e)),
        };
        if status.is_success() {
            return serde_json::from_str(&text)
                .map(Attempt::Done)
                .map_err(|e| ProviderError::Decode(e.to_string()));
        }
        let detail: ErrorBody = serde_json::from_str(&text)
            .unwrap_or(ErrorBody { code: String::new(), message: text.clone() });
        let msg = format!("HTTP {}: {}", status.as_u16(), detail.message);
        match status.as_u16() {
            401 | 403 => Err(ProviderError::Auth(msg)),
            429 => Ok(Attempt::Retry(ProviderError::Quota(msg))),
            s if s >= 500 => Ok(Attempt::Retry(ProviderError::Transient(msg))),
            _ if detail.code == "content_policy" => Err(ProviderError::ContentPolicy(detail.message)),
            _ => Err(ProviderError::InvalidRequest(msg)),
        }
    }
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| ProviderError::Decode(format!("response lacks `{key}`")))
}

fn str_field<'a>(v: &'a Value, key: &str) -> Result<&'a str> {
    field(v, key)?
        .as_str()
        .ok_or_else(|| ProviderError::Decode(format!("`{key}` is not a string")))
}

fn bytes_field(v: &Value, key: &str) -> Result<Vec<u8>> {
    B64.decode(str_field(v, key)?)
        .map_err(|e| ProviderError::Decode(format!("`{key}`: {e}")))
}

fn embedding_field(v: &Value) -> Result<Embedding> {
    let values: Vec<f32> = serde_json::from_value(field(v, "embedding")?.clone())
        .map_err(|e| ProviderError::Decode(e.to_string()))?;
    Embedding::new(values).map_err(|e| ProviderError::Decode(e.to_string()))
}

fn gate(caps: ProviderCapabilities, c: Capability) -> Result<()> {
    caps.require(c)
}

pub struct HttpLlm(pub Arc<HttpTransport>);
pub struct HttpMusic(pub Arc<HttpTransport>);
pub struct HttpEmbedder(pub Arc<HttpTransport>);
pub struct HttpImages(pub Arc<HttpTransport>);

#[async_trait]
impl LlmProvider for HttpLlm {
    fn capabilities(&self) -> ProviderCapabilities {
        self.0.config.capabilities
    }

    async fn complete(&self, request: &LlmRequest) -> Result<String> {
        let caps = self.capabilities();
        for a in &request.attachments {
            if let Some(c) = a.capability() {
                gate(caps, c)?;
            }
        }
        let attachments: Vec<Value> = request
            .attachments
            .iter()
            .map(|a| json!({ "kind": a.kind, "mime": a.mime, "data_b64": B64.encode(&a.data) }))
            .collect();
        let body = json!({
            "template_id": request.template_id.as_str(),
            "prompt": request.text(),
            "attachments": attachments,
        });
        let v = self.0.post("/v1/complete", &body).await?;
        Ok(str_field(&v, "text")?.to_string())
    }
}

#[async_trait]
impl MusicProvider for HttpMusic {
    fn capabilities(&self) -> ProviderCapabilities {
        self.0.config.capabilities
    }

    async fn generate(&self, request: &MusicRequest) -> Result<Vec<u8>> {
        gate(self.capabilities(), request.required_capability())?;
        request.validate()?;
        let body = json!({
            "prompt": request.prompt,
            "duration_s": request.duration_s,
            "variation": request.variation,
            "condition_audio_b64": request.condition_audio.as_ref().map(|b| B64.encode(b)),
        });
        let v = self.0.post("/v1/music", &body).await?;
        bytes_field(&v, "audio_b64")
    }
}

#[async_trait]
impl EmbeddingProvider for HttpEmbedder {
    fn capabilities(&self) -> ProviderCapabilities {
        self.0.config.capabilities
    }

    async fn embed_audio(&self, wav: &[u8]) -> Result<Embedding> {
        gate(self.capabilities(), Capability::AudioEmbedding)?;
        let v = self.0.post("/v1/embed/audio", &json!({ "audio_b64": B64.encode(wav) })).await?;
        embedding_field(&v)
    }

    async fn embed_text(&self, text: &str) -> Result<Embedding> {
        gate(self.capabilities(), Capability::TextEmbedding)?;
        let v = self.0.post("/v1/embed/text", &json!({ "text": text })).await?;
        embedding_field(&v)
    }
}

#[async_trait]
impl ImageProvider for HttpImages {
    fn capabilities(&self) -> ProviderCapabilities {
        self.0.config.capabilities
    }

    async fn generate_image(&self, prompt: &str) -> Result<Vec<u8>> {
        gate(self.capabilities(), Capability::TextToImage)?;
        let v = self.0.post("/v1/image", &json!({ "prompt": prompt })).await?;
        bytes_field(&v, "image_b64")
    }

    async fn animate_image(&self, image: &[u8], prompt: &str, duration_s: f64) -> Result<Clip> {
        gate(self.capabilities(), Capability::ImageToVideo)?;
        let body = json!({ "image_b64": B64.encode(image), "prompt": prompt, "duration_s": duration_s });
        let v = self.0.post("/v1/animate", &body).await?;
        let ext = str_field(&v, "ext").unwrap_or("mp4").to_string();
        let duration_s = field(&v, "duration_s")?.as_f64().unwrap_or(duration_s);
        Ok(Clip { bytes: bytes_field(&v, "clip_b64")?, ext, duration_s })
    }
}
