use std::collections::HashMap;

use async_trait::async_trait;
use soundstage_core::audiokit::Wav;
use soundstage_core::Embedding;

use super::music::Fingerprint;
use crate::capabilities::ProviderCapabilities;
use crate::error::{ProviderError, Result};
use crate::features::{hash64, hashed_direction, scale_to_unit, token_features, tokens};
use crate::EmbeddingProvider;

/// Weight of the per-lineage timbre direction in audio embeddings.
const TIMBRE_WEIGHT: f64 = 0.35;
/// Weight of the per-take direction (differs between variations).
const TAKE_WEIGHT: f64 = 0.2;
const SPECTRAL_SECONDS: f64 = 10.0;

/// Text and audio embedder sharing one hashed token space, so a mock clip
/// lands near the text of the prompt that produced it.
#[derive(Clone, Debug)]
pub struct MockEmbedder {
    seed: u64,
}

fn to_embedding(v: Vec<f64>) -> Result<Embedding> {
    let v = scale_to_unit(v);
    if v.iter().all(|x| *x == 0.0) {
        return Err(ProviderError::InvalidRequest("nothing to embed".into()));
    }
    Embedding::unit(v.into_iter().map(|x| x as f32).collect())
        .map_err(|e| ProviderError::Decode(e.to_string()))
}

fn add(acc: &mut [f64], v: &[f64], w: f64) {
    acc.iter_mut().zip(v).for_each(|(a, b)| *a += w * b);
}

impl MockEmbedder {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn text_vector(&self, text: &str) -> Result<Embedding> {
        let mut toks = tokens(text);
        if toks.is_empty() {
            let trimmed = text.trim().to_lowercase();
            if trimmed.is_empty() {
                return Err(ProviderError::InvalidRequest("cannot embed empty text".into()));
            }
            toks.push(trimmed);
        }
        to_embedding(scale_to_unit(token_features(&toks, self.seed)))
    }

    pub fn audio_vector(&self, wav_bytes: &[u8]) -> Result<Embedding> {
        match Fingerprint::read(wav_bytes) {
            Some(fp) => {
                let mut v = if fp.tokens.is_empty() {
                    vec![0.0; soundstage_core::vecmath::EMBEDDING_DIM]
                } else {
                    scale_to_unit(token_features(&fp.tokens, self.seed))
                };
                add(&mut v, &hashed_direction(fp.base_seed, self.seed), TIMBRE_WEIGHT);
                let take = hash64(&[
                    b"take",
                    &fp.base_seed.to_le_bytes(),
                    &fp.detune.to_bits().to_le_bytes(),
                    &fp.variation.to_le_bytes(),
                ]);
                add(&mut v, &hashed_direction(take, self.seed), TAKE_WEIGHT);
                to_embedding(v)
            }
            None => self.spectral_vector(wav_bytes),
        }
    }

    // Semitone energies of the first seconds, hashed into the embedding space.
    fn spectral_vector(&self, wav_bytes: &[u8]) -> Result<Embedding> {
        let wav = Wav::parse(wav_bytes).map_err(|e| ProviderError::InvalidRequest(e.to_string()))?;
        let ch = usize::from(wav.channels);
        let sr = f64::from(wav.sample_rate);
        let frames = (wav.frames() as usize).min((SPECTRAL_SECONDS * sr) as usize);
        let mono: Vec<f64> = (0..frames)
            .map(|i| (0..ch).map(|c| f64::from(wav.samples[i * ch + c])).sum::<f64>() / ch as f64 / 32768.0)
            .collect();
        let mut v = vec![0.0; soundstage_core::vecmath::EMBEDDING_DIM];
        for k in 0..48u64 {
            let f = 110.0 * 2f64.powf(k as f64 / 12.0);
            let coeff = 2.0 * (std::f64::consts::TAU * f / sr).cos();
            let (mut s1, mut s2) = (0.0, 0.0);
            for x in &mono {
                let s0 = x + coeff * s1 - s2;
                s2 = s1;
                s1 = s0;
            }
            let power = (s1 * s1 + s2 * s2 - coeff * s1 * s2).max(0.0);
            add(&mut v, &hashed_direction(k, self.seed ^ 0x5eed), (1.0 + power).ln());
        }
        to_embedding(v)
    }
}

#[async_trait]
impl EmbeddingProvider for MockEmbedder {
    fn capabilities(&self) -> ProviderCapabilities {
        ProviderCapabilities {
            audio_embedding: true,
            text_embedding: true,
            ..ProviderCapabilities::NONE
        }
    }

    async fn embed_audio(&self, wav: &[u8]) -> Result<Embedding> {
        self.audio_vector(wav)
    }

    async fn embed_text(&self, text: &str) -> Result<Embedding> {
        self.text_vector(text)
    }
}

/// Fixed embeddings for chosen texts and for audio generated from chosen
/// prompts; everything else goes to the wrapped mock.
#[derive(Clone, Debug)]
pub struct TableEmbedder {
    pub text: HashMap<String, Embedding>,
    pub audio_by_prompt: HashMap<String, Embedding>,
    fallback: MockEmbedder,
}

impl TableEmbedder {
    pub fn new(seed: u64) -> Self {
        Self {
            text: HashMap::new(),
            audio_by_prompt: HashMap::new(),
            fallback: MockEmbedder::new(seed),
        }
    }

    pub fn with_text(mut self, text: impl Into<String>, e: Embedding) -> Self {
        self.text.insert(text.into(), e);
        self
    }

    pub fn with_audio(mut self, prompt: impl Into<String>, e: Embedding) -> Self {
        self.audio_by_prompt.insert(prompt.into(), e);
        self
    }
}

#[async_trait]
impl EmbeddingProvider for TableEmbedder {
    fn capabilities(&self) -> ProviderCapabilities {
        self.fallback.capabilities()
    }

    async fn embed_audio(&self, wav: &[u8]) -> Result<Embedding> {
        if let Some(e) = Fingerprint::read(wav).and_then(|fp| self.audio_by_prompt.get(&fp.prompt).cloned()) {
            return Ok(e);
        }
        self.fallback.audio_vector(wav)
    }

    async fn embed_text(&self, text: &str) -> Result<Embedding> {
        match self.text.get(text) {
            Some(e) => Ok(e.clone()),
            None => self.fallback.text_vector(text),
        }
    }
}
