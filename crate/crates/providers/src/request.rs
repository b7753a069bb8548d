use serde::{Deserialize, Serialize};
use soundstage_core::templates::{TemplateId, Variables};

use crate::capabilities::Capability;
use crate::error::{ProviderError, Result};

pub const MAX_MUSIC_DURATION_S: f64 = 600.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediaKind {
    Audio,
    Video,
    Image,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Attachment {
    pub kind: MediaKind,
    pub mime: String,
    pub data: Vec<u8>,
}

impl Attachment {
    pub fn wav(data: Vec<u8>) -> Self {
        Self { kind: MediaKind::Audio, mime: "audio/wav".into(), data }
    }

    pub fn video(mime: impl Into<String>, data: Vec<u8>) -> Self {
        Self { kind: MediaKind::Video, mime: mime.into(), data }
    }

    pub(crate) fn capability(&self) -> Option<Capability> {
        match self.kind {
            MediaKind::Audio => Some(Capability::LlmWithAudio),
            MediaKind::Video => Some(Capability::LlmWithVideo),
            MediaKind::Image => None,
        }
    }
}

/// One rendered template on its way to a language model.
#[derive(Clone, Debug, PartialEq)]
pub struct LlmRequest {
    pub template_id: TemplateId,
    pub prompt: String,
    pub variables: Variables,
    pub attachments: Vec<Attachment>,
    /// Corrective note for a retry after a rejected response.
    pub feedback: Option<String>,
}

impl LlmRequest {
    /// The prompt text actually sent, with any corrective feedback appended.
    pub fn text(&self) -> String {
        match &self.feedback {
            Some(f) => format!(
                "{}\n\nYour previous response was rejected: {f}\nReturn a corrected response that follows every rule.",
                self.prompt
            ),
            None => self.prompt.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MusicRequest {
    pub prompt: String,
    pub duration_s: f64,
    /// Parent WAV bytes for audio-conditioned generation.
    pub condition_audio: Option<Vec<u8>>,
    pub variation: u32,
}

impl MusicRequest {
    pub fn text(prompt: impl Into<String>, duration_s: f64) -> Self {
        Self { prompt: prompt.into(), duration_s, condition_audio: None, variation: 0 }
    }

    pub fn conditioned(parent_wav: Vec<u8>, duration_s: f64, variation: u32) -> Self {
        Self { prompt: String::new(), duration_s, condition_audio: Some(parent_wav), variation }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s <= MAX_MUSIC_DURATION_S) {
            return Err(ProviderError::InvalidRequest(format!(
                "duration {} s outside (0, {MAX_MUSIC_DURATION_S}]",
                self.duration_s
            )));
        }
        if self.condition_audio.is_none() && self.prompt.trim().is_empty() {
            return Err(ProviderError::InvalidRequest("empty music prompt".into()));
        }
        Ok(())
    }

    pub fn required_capability(&self) -> Capability {
        if self.condition_audio.is_some() {
            Capability::AudioConditionedMusic
        } else {
            Capability::TextToMusic
        }
    }
}

/// Animated clip bytes returned by an image-to-video provider.
#[derive(Clone, Debug, PartialEq)]
pub struct Clip {
    pub bytes: Vec<u8>,
    pub ext: String,
    pub duration_s: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duration_bounds() {
        assert!(MusicRequest::text("x", 0.0).validate().is_err());
        assert!(MusicRequest::text("x", 600.0).validate().is_ok());
        assert!(MusicRequest::text("x", 600.5).validate().is_err());
        assert!(MusicRequest::text("  ", 5.0).validate().is_err());
        assert!(MusicRequest::conditioned(vec![], 5.0, 1).validate().is_ok());
    }
}
