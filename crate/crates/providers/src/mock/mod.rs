//! Deterministic offline providers. Same seed and inputs, same bytes.

mod embed;
mod image;
mod llm;
mod music;
mod scripted;

pub use embed::{MockEmbedder, TableEmbedder};
pub use image::{png_prompt_hash, prompt_hash, MockImages, StubClip, CLIP_EXT, PROMPT_HASH_KEY};
pub use llm::MockLlm;
pub use music::{partials_for, synthesize, Fingerprint, MockMusic, FINGERPRINT_CHUNK, MOCK_SAMPLE_RATE};
pub use scripted::{Fault, FaultyMusic, ScriptedLlm};
