//! Golden outputs of the mock providers for a fixed set of canonical inputs.
//! Any change to mock behaviour shows up as a golden diff.

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};
use soundstage_core::templates::{TemplateId, TemplateRegistry, Variables};

use crate::error::{ProviderError, Result};
use crate::mock::{MockEmbedder, MockImages, MockLlm, MockMusic};
use crate::request::{Attachment, LlmRequest, MusicRequest};

pub const GOLDEN_SEED: u64 = 7;
pub const CHECKSUM_FILE: &str = "checksums.json";

const CANONICAL_PROMPT: &str = "calm acoustic guitar with soft piano";

fn canonical_variables(id: TemplateId) -> Variables {
    let v = Variables::new();
    match id {
        TemplateId::VideoAnalysis => v.text("videoDuration", "95"),
        TemplateId::MusicAnalysis => v
            .text("title", "Octopus Adventures")
            .text("videoType", "octopus")
            .text("audience", "kids")
            .text("soundtrackGoal", "playful and warm")
            .text("protagonist", "a friendly cartoon octopus")
            .text("sceneStart", "00:00")
            .text("sceneEnd", "00:32")
            .text("sceneDuration", "00:32")
            .text("sceneDescription", "Opening shot that introduces the main subject and setting")
            .text("sceneVibe", "Calm, warm and introspective")
            .text("originalPrompt", CANONICAL_PROMPT),
        TemplateId::EditExpansion => v
            .text("originalPrompt", CANONICAL_PROMPT)
            .text("originalMusicDescription", "Tempo: 72 BPM, slow pace. Instrumentation: guitar lead.")
            .text("editRequest", "make it calmer"),
        TemplateId::BlendExpansion => v.list(
            "musicDescriptions",
            ["Warm jazz with piano and soft drums", "Lo-fi piano with vinyl crackle", "Acoustic guitar and piano ballad"],
        ),
        TemplateId::PromptModifiers => v.text("query", "jazz piano").text("count", "6"),
        TemplateId::VisualAnchors => v
            .text("title", "Paris in Spring")
            .text("videoType", "travel")
            .text("audience", "adults")
            .text("videoDuration", "120")
            .text("sceneSummary", "Street cafes, the river and the tower at dusk"),
        TemplateId::SceneKeywords => v
            .text("sceneDescription", "A quieter, reflective moment")
            .text("sceneVibe", "Calm, warm and introspective")
            .text("recentCaptions", "soft piano, gentle strings"),
        TemplateId::BaselineThumbnail => v.text("originalPrompt", CANONICAL_PROMPT),
    }
}

fn sha(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// File name to contents for every golden file.
pub fn golden_files(seed: u64) -> Result<BTreeMap<String, String>> {
    let templates = TemplateRegistry::builtin();
    let llm = MockLlm::new(seed);
    let music = MockMusic::new(seed);
    let wav = music.render(&MusicRequest::text(CANONICAL_PROMPT, 10.0))?;
    let mut files = BTreeMap::new();
    for id in TemplateId::ALL {
        let variables = canonical_variables(id);
        let attachments = match id {
            TemplateId::MusicAnalysis | TemplateId::BaselineThumbnail => vec![Attachment::wav(wav.clone())],
            _ => Vec::new(),
        };
        let request = LlmRequest {
            template_id: id,
            prompt: templates.render(id, &variables)?,
            variables,
            attachments,
            feedback: None,
        };
        let out = serde_json::to_string_pretty(&llm.respond(&request)?)
            .map_err(|e| ProviderError::Decode(e.to_string()))?;
        files.insert(format!("llm_{}.json", id.as_str()), out + "\n");
    }

    let child = music.render(&MusicRequest::conditioned(wav.clone(), 10.0, 1))?;
    let images = MockImages::new(seed);
    let png = images.render_png(CANONICAL_PROMPT)?;
    let clip = images.render_clip(&png, CANONICAL_PROMPT, crate::ANIMATION_SECONDS)?;
    let embedder = MockEmbedder::new(seed);
    let emb_bytes = |e: soundstage_core::Embedding| -> Vec<u8> {
        e.values().iter().flat_map(|x| x.to_le_bytes()).collect()
    };
    let mut sums = BTreeMap::new();
    sums.insert("music_text", sha(&wav));
    sums.insert("music_conditioned", sha(&child));
    sums.insert("image_png", sha(&png));
    sums.insert("clip", sha(&clip.bytes));
    sums.insert("embedding_text", sha(&emb_bytes(embedder.text_vector(CANONICAL_PROMPT)?)));
    sums.insert("embedding_audio", sha(&emb_bytes(embedder.audio_vector(&wav)?)));
    files.insert(
        CHECKSUM_FILE.into(),
        serde_json::to_string_pretty(&sums).expect("string map serializes") + "\n",
    );
    Ok(files)
}

pub fn write_goldens(dir: &Path, seed: u64) -> std::io::Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let files = golden_files(seed).map_err(std::io::Error::other)?;
    for (name, body) in &files {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(files.into_keys().collect())
}

/// Names of golden files that are missing or differ from what the mocks produce now.
pub fn compare_goldens(dir: &Path, seed: u64) -> Result<Vec<String>> {
    let files = golden_files(seed)?;
    Ok(files
        .into_iter()
        .filter(|(name, body)| std::fs::read_to_string(dir.join(name)).ok().as_deref() != Some(body))
        .map(|(name, _)| name)
        .collect())
}
