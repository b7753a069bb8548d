use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::capabilities::ProviderCapabilities;
use crate::error::{ProviderError, Result};
use crate::request::Clip;
use crate::ImageProvider;

const SIDE: u32 = 32;
const BLOCK: u32 = 8;
pub const PROMPT_HASH_KEY: &str = "prompt_sha256";
pub const CLIP_EXT: &str = "clip";

/// Body of a mock animated clip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StubClip {
    pub kind: String,
    pub duration_s: f64,
    pub fps: u32,
    pub looped: bool,
    pub first_frame_sha256: String,
    pub prompt_sha256: String,
}

/// PNG stills whose pixel blocks spell out the prompt hash, and JSON stub clips.
#[derive(Clone, Debug)]
pub struct MockImages {
    seed: u64,
}

pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

impl MockImages {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn render_png(&self, prompt: &str) -> Result<Vec<u8>> {
        let digest = Sha256::digest(prompt.as_bytes());
        let mut palette = digest.to_vec();
        palette.extend_from_slice(&Sha256::digest([&digest[..], &self.seed.to_le_bytes()].concat()));
        let blocks = SIDE / BLOCK;
        let mut data = Vec::with_capacity((SIDE * SIDE * 3) as usize);
        for y in 0..SIDE {
            for x in 0..SIDE {
                let b = ((y / BLOCK) * blocks + x / BLOCK) as usize * 3;
                data.extend_from_slice(&palette[b..b + 3]);
            }
        }
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, SIDE, SIDE);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            enc.add_text_chunk(PROMPT_HASH_KEY.to_string(), hex::encode(digest))
                .map_err(|e| ProviderError::Decode(e.to_string()))?;
            let mut writer = enc.write_header().map_err(|e| ProviderError::Decode(e.to_string()))?;
            writer
                .write_image_data(&data)
                .map_err(|e| ProviderError::Decode(e.to_string()))?;
        }
        Ok(out)
    }
}

impl MockImages {
    pub fn render_clip(&self, image: &[u8], prompt: &str, duration_s: f64) -> Result<Clip> {
        if image.is_empty() {
            return Err(ProviderError::InvalidRequest("animation needs a first frame".into()));
        }
        let body = StubClip {
            kind: "soundstage-stub-clip".into(),
            duration_s,
            fps: 24,
            looped: true,
            first_frame_sha256: hex::encode(Sha256::digest(image)),
            prompt_sha256: prompt_hash(prompt),
        };
        Ok(Clip {
            bytes: serde_json::to_vec_pretty(&body).map_err(|e| ProviderError::Decode(e.to_string()))?,
            ext: CLIP_EXT.into(),
            duration_s,
        })
    }
}

/// Reads the prompt hash back out of a PNG's text chunks.
pub fn png_prompt_hash(bytes: &[u8]) -> Option<String> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let reader = decoder.read_info().ok()?;
    reader
        .info()
        .uncompressed_latin1_text
        .iter()
        .find(|t| t.keyword == PROMPT_HASH_KEY)
        .map(|t| t.text.clone())
}

#[async_trait]
impl ImageProvider for MockImages {
    fn capabilities(&self) -> ProviderCapabilities {
        ProviderCapabilities {
            text_to_image: true,
            image_to_video: true,
            ..ProviderCapabilities::NONE
        }
    }

    async fn generate_image(&self, prompt: &str) -> Result<Vec<u8>> {
        self.render_png(prompt)
    }

    async fn animate_image(&self, image: &[u8], prompt: &str, duration_s: f64) -> Result<Clip> {
        self.render_clip(image, prompt, duration_s)
    }
}
