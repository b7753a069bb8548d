//! Provider interfaces for the generative models soundstage orchestrates:
//! language models, text-to-music, audio/text embedders, image and clip generators.
//!
//! Every interface has a deterministic mock ([`mock`]) and an HTTP adapter ([`http`]).
//! [`Providers`] bundles one of each with the prompt templates and checks capabilities
//! before any call is made.

pub mod capabilities;
pub mod error;
pub mod features;
pub mod fixtures;
pub mod http;
pub mod mock;
pub mod request;

use std::sync::Arc;

use async_trait::async_trait;
use soundstage_core::assets::{AssetRef, AssetStore};
use soundstage_core::audiokit::{AudioAsset, Wav};
use soundstage_core::model::ClipRef;
use soundstage_core::templates::{TemplateId, TemplateRegistry, Variables};
use soundstage_core::vecmath::EMBEDDING_DIM;
use soundstage_core::Embedding;

pub use capabilities::{Capability, ProviderCapabilities, EXPANSION_CAPABILITIES};
pub use error::{ProviderError, Result};
pub use request::{Attachment, Clip, LlmRequest, MediaKind, MusicRequest, MAX_MUSIC_DURATION_S};

pub const ANIMATION_SECONDS: f64 = 8.0;

#[async_trait]
pub trait LlmProvider: Send + Sync {
    fn capabilities(&self) -> ProviderCapabilities;
    async fn complete(&self, request: &LlmRequest) -> Result<String>;
}

#[async_trait]
pub trait MusicProvider: Send + Sync {
    fn capabilities(&self) -> ProviderCapabilities;
    /// Returns 16-bit PCM WAV bytes.
    async fn generate(&self, request: &MusicRequest) -> Result<Vec<u8>>;
}

#[async_trait]
pub trait EmbeddingProvider: Send + Sync {
    fn capabilities(&self) -> ProviderCapabilities;
    async fn embed_audio(&self, wav: &[u8]) -> Result<Embedding>;
    async fn embed_text(&self, text: &str) -> Result<Embedding>;
}

#[async_trait]
pub trait ImageProvider: Send + Sync {
    fn capabilities(&self) -> ProviderCapabilities;
    /// Returns PNG bytes.
    async fn generate_image(&self, prompt: &str) -> Result<Vec<u8>>;
    async fn animate_image(&self, image: &[u8], prompt: &str, duration_s: f64) -> Result<Clip>;
}

/// One provider per role plus the prompt templates.
#[derive(Clone)]
pub struct Providers {
    pub llm: Arc<dyn LlmProvider>,
    pub music: Arc<dyn MusicProvider>,
    pub embedder: Arc<dyn EmbeddingProvider>,
    pub images: Arc<dyn ImageProvider>,
    pub templates: Arc<TemplateRegistry>,
}

fn asset_err(e: impl std::fmt::Display) -> ProviderError {
    ProviderError::Asset(e.to_string())
}

impl Providers {
    /// Deterministic mocks for every role.
    pub fn mock(seed: u64) -> Self {
        Self {
            llm: Arc::new(mock::MockLlm::new(seed)),
            music: Arc::new(mock::MockMusic::new(seed)),
            embedder: Arc::new(mock::MockEmbedder::new(seed)),
            images: Arc::new(mock::MockImages::new(seed)),
            templates: Arc::new(TemplateRegistry::builtin()),
        }
    }

    pub fn with_llm(mut self, llm: Arc<dyn LlmProvider>) -> Self {
        self.llm = llm;
        self
    }

    pub fn with_music(mut self, music: Arc<dyn MusicProvider>) -> Self {
        self.music = music;
        self
    }

    pub fn with_embedder(mut self, embedder: Arc<dyn EmbeddingProvider>) -> Self {
        self.embedder = embedder;
        self
    }

    pub fn with_images(mut self, images: Arc<dyn ImageProvider>) -> Self {
        self.images = images;
        self
    }

    pub fn with_templates(mut self, templates: Arc<TemplateRegistry>) -> Self {
        self.templates = templates;
        self
    }

    /// Capabilities of each role, combined.
    pub fn capabilities(&self) -> ProviderCapabilities {
        let (l, m, e, i) = (
            self.llm.capabilities(),
            self.music.capabilities(),
            self.embedder.capabilities(),
            self.images.capabilities(),
        );
        ProviderCapabilities {
            text_to_music: m.text_to_music,
            audio_conditioned_music: m.audio_conditioned_music,
            llm_with_audio: l.llm_with_audio,
            llm_with_video: l.llm_with_video,
            text_to_image: i.text_to_image,
            image_to_video: i.image_to_video,
            audio_embedding: e.audio_embedding,
            text_embedding: e.text_embedding,
        }
    }

    pub fn require(&self, caps: &[Capability]) -> Result<()> {
        self.capabilities().require_all(caps)
    }

    /// Renders the template (failing on any missing variable) and sends it.
    pub async fn llm_complete(
        &self,
        template_id: TemplateId,
        variables: &Variables,
        attachments: Vec<Attachment>,
        feedback: Option<String>,
    ) -> Result<String> {
        let prompt = self.templates.render(template_id, variables)?;
        let caps = self.llm.capabilities();
        for a in &attachments {
            if let Some(c) = a.capability() {
                caps.require(c)?;
            }
        }
        let request = LlmRequest {
            template_id,
            prompt,
            variables: variables.clone(),
            attachments,
            feedback,
        };
        self.llm.complete(&request).await
    }

    /// Generates, checks and stores one WAV.
    pub async fn generate_music(&self, store: &AssetStore, request: &MusicRequest) -> Result<AudioAsset> {
        self.music.capabilities().require(request.required_capability())?;
        request.validate()?;
        let bytes = self.music.generate(request).await?;
        let wav = Wav::parse(&bytes).map_err(|e| ProviderError::Decode(e.to_string()))?;
        let duration = wav.duration();
        if (duration - request.duration_s).abs() > 0.5 {
            return Err(ProviderError::Decode(format!(
                "requested {} s of audio, got {duration} s",
                request.duration_s
            )));
        }
        let path = store.put(&bytes, "wav").map_err(asset_err)?;
        Ok(AudioAsset::from_info(path, wav.info()))
    }

    pub async fn embed_audio(&self, store: &AssetStore, audio: &AudioAsset) -> Result<Embedding> {
        self.embedder.capabilities().require(Capability::AudioEmbedding)?;
        let bytes = store.get(&audio.path).map_err(asset_err)?;
        checked_embedding(self.embedder.embed_audio(&bytes).await?)
    }

    pub async fn embed_text(&self, text: &str) -> Result<Embedding> {
        self.embedder.capabilities().require(Capability::TextEmbedding)?;
        if text.trim().is_empty() {
            return Err(ProviderError::InvalidRequest("cannot embed empty text".into()));
        }
        checked_embedding(self.embedder.embed_text(text).await?)
    }

    pub async fn generate_image(&self, store: &AssetStore, prompt: &str) -> Result<AssetRef> {
        self.images.capabilities().require(Capability::TextToImage)?;
        if prompt.trim().is_empty() {
            return Err(ProviderError::InvalidRequest("empty image prompt".into()));
        }
        let png = self.images.generate_image(prompt).await?;
        store.put(&png, "png").map_err(asset_err)
    }

    /// Animates a stored still; `image` is the first frame.
    pub async fn animate_image(
        &self,
        store: &AssetStore,
        image: Option<&AssetRef>,
        prompt: &str,
        duration_s: f64,
    ) -> Result<ClipRef> {
        self.images.capabilities().require(Capability::ImageToVideo)?;
        let image = image.ok_or_else(|| {
            ProviderError::InvalidRequest("animation needs a static image first".into())
        })?;
        if !(duration_s > 0.0) {
            return Err(ProviderError::InvalidRequest(format!("clip duration {duration_s}")));
        }
        let bytes = store.get(image).map_err(asset_err)?;
        let clip = self.images.animate_image(&bytes, prompt, duration_s).await?;
        let asset = store.put(&clip.bytes, &clip.ext).map_err(asset_err)?;
        Ok(ClipRef { asset, duration_s: clip.duration_s })
    }
}

fn checked_embedding(e: Embedding) -> Result<Embedding> {
    if e.dim() != EMBEDDING_DIM {
        return Err(ProviderError::Decode(format!(
            "embedding has {} dimensions, expected {EMBEDDING_DIM}",
            e.dim()
        )));
    }
    if e.is_unit() {
        Ok(e)
    } else {
        e.normalized().map_err(|err| ProviderError::Decode(err.to_string()))
    }
}
