use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ProviderError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    TextToMusic,
    AudioConditionedMusic,
    LlmWithAudio,
    LlmWithVideo,
    TextToImage,
    ImageToVideo,
    AudioEmbedding,
    TextEmbedding,
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(|v| v.as_str()).unwrap_or("unknown"))
    }
}

/// What a provider (or a bundle of providers) can do.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderCapabilities {
    pub text_to_music: bool,
    pub audio_conditioned_music: bool,
    pub llm_with_audio: bool,
    pub llm_with_video: bool,
    pub text_to_image: bool,
    pub image_to_video: bool,
    pub audio_embedding: bool,
    pub text_embedding: bool,
}

impl ProviderCapabilities {
    pub const NONE: Self = Self {
        text_to_music: false,
        audio_conditioned_music: false,
        llm_with_audio: false,
        llm_with_video: false,
        text_to_image: false,
        image_to_video: false,
        audio_embedding: false,
        text_embedding: false,
    };

    pub const ALL: Self = Self {
        text_to_music: true,
        audio_conditioned_music: true,
        llm_with_audio: true,
        llm_with_video: true,
        text_to_image: true,
        image_to_video: true,
        audio_embedding: true,
        text_embedding: true,
    };

    pub fn only(caps: &[Capability]) -> Self {
        let mut out = Self::NONE;
        for c in caps {
            out.set(*c, true);
        }
        out
    }

    pub fn has(&self, c: Capability) -> bool {
        match c {
            Capability::TextToMusic => self.text_to_music,
            Capability::AudioConditionedMusic => self.audio_conditioned_music,
            Capability::LlmWithAudio => self.llm_with_audio,
            Capability::LlmWithVideo => self.llm_with_video,
            Capability::TextToImage => self.text_to_image,
            Capability::ImageToVideo => self.image_to_video,
            Capability::AudioEmbedding => self.audio_embedding,
            Capability::TextEmbedding => self.text_embedding,
        }
    }

    pub fn set(&mut self, c: Capability, on: bool) {
        let slot = match c {
            Capability::TextToMusic => &mut self.text_to_music,
            Capability::AudioConditionedMusic => &mut self.audio_conditioned_music,
            Capability::LlmWithAudio => &mut self.llm_with_audio,
            Capability::LlmWithVideo => &mut self.llm_with_video,
            Capability::TextToImage => &mut self.text_to_image,
            Capability::ImageToVideo => &mut self.image_to_video,
            Capability::AudioEmbedding => &mut self.audio_embedding,
            Capability::TextEmbedding => &mut self.text_embedding,
        };
        *slot = on;
    }

    pub fn without(mut self, c: Capability) -> Self {
        self.set(c, false);
        self
    }

    pub fn require(&self, c: Capability) -> Result<()> {
        if self.has(c) {
            Ok(())
        } else {
            Err(ProviderError::Unsupported(c))
        }
    }

    pub fn require_all(&self, caps: &[Capability]) -> Result<()> {
        caps.iter().try_for_each(|c| self.require(*c))
    }
}

/// Capabilities needed by prompt expansion.
pub const EXPANSION_CAPABILITIES: [Capability; 3] = [
    Capability::TextToMusic,
    Capability::AudioEmbedding,
    Capability::TextEmbedding,
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_and_require() {
        let caps = ProviderCapabilities::only(&[Capability::TextToMusic]);
        assert!(caps.require(Capability::TextToMusic).is_ok());
        assert_eq!(
            caps.require(Capability::AudioConditionedMusic),
            Err(ProviderError::Unsupported(Capability::AudioConditionedMusic))
        );
        assert!(ProviderCapabilities::ALL.require_all(&EXPANSION_CAPABILITIES).is_ok());
        assert_eq!(Capability::LlmWithAudio.to_string(), "llm_with_audio");
    }
}
