//! Contextual thumbnails: a visual anchor from the video plus style clauses
//! derived from the music, fused into one image prompt.

use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};
use soundstage_core::assets::{AssetRef, AssetStore};
use soundstage_core::lexicon;
use soundstage_core::model::{AnchorKind, ClipRef, MusicAnalysis, Project, SceneId, TagCategory, Track, VisualAnchor};
use soundstage_core::templates::{TemplateId, Variables};
use soundstage_providers::{Attachment, Providers, ANIMATION_SECONDS};

use crate::analysis::{find_word, lexicon_mentions, VideoInput};
use crate::ask::{ask, seconds_text, DEFAULT_RETRIES};
use crate::error::{EngineError, Result};
use crate::schema;

pub const LEXICON_VERSION: &str = "v1";
pub const MAX_ANCHORS: usize = 3;
pub const DEFAULT_STYLE_SUFFIX: &str =
    "Style: 3D animation, Pixar-quality rendering, cinematic lighting, highly detailed, vibrant and expressive.";
pub const FALLBACK_ANCHOR: &str = "A cinematic shot of the scene.";
pub const SIDECAR_SUFFIX: &str = "thumb.json";
pub const FAST_BPM: u32 = 120;
pub const SLOW_BPM: u32 = 80;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TempoClass {
    Slow,
    Medium,
    Fast,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Valence {
    Negative,
    Neutral,
    Positive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Energy {
    Low,
    Medium,
    High,
}

impl TempoClass {
    pub const ALL: [TempoClass; 3] = [TempoClass::Slow, TempoClass::Medium, TempoClass::Fast];
}
impl Valence {
    pub const ALL: [Valence; 3] = [Valence::Negative, Valence::Neutral, Valence::Positive];
}
impl Energy {
    pub const ALL: [Energy; 3] = [Energy::Low, Energy::Medium, Energy::High];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instrument {
    pub name: String,
    pub prominence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MusicAttributes {
    pub genre: String,
    /// Most prominent first.
    pub instruments: Vec<Instrument>,
    pub tempo_class: TempoClass,
    pub emotion: String,
    pub valence: Valence,
    pub energy: Energy,
}

impl MusicAttributes {
    pub fn check(&self) -> Result<()> {
        if self.instruments.is_empty() {
            return Err(EngineError::Precondition("at least one instrument is required".into()));
        }
        if self.instruments.windows(2).any(|w| w[0].prominence < w[1].prominence) {
            return Err(EngineError::Precondition("instruments must be sorted by prominence".into()));
        }
        Ok(())
    }
}

/// Table row a style clause comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StyleRow {
    Genre,
    Instruments,
    Tempo,
    Emotion,
    Valence,
    Energy,
}

impl fmt::Display for StyleRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

const GENRE_SETTINGS: &[(&str, &str)] = &[
    ("jazz", "A warm, intimate jazz club with soft amber lighting and swirling smoke patterns"),
    ("lo-fi", "A cozy bedroom studio at dusk with rain on the window and a glowing desk lamp, in a soft hand-drawn style"),
    ("ambient", "A serene, ethereal space with floating geometric forms and gentle light emanations"),
    ("electronic", "A futuristic urban landscape under a neon glow, with energy conduits crisscrossing through digital architecture, in a neon cityscape style"),
    ("orchestral", "A grand natural amphitheater surrounded by majestic mountains and flowing waterfalls"),
    ("rock", "A dynamic concert stage with dramatic lighting and electric energy crackling through the air"),
    ("folk", "A cozy, rustic environment with warm wooden textures and natural, earthy elements"),
    ("pop", "A glossy pop stage with bold geometric backdrops and confetti in the air"),
    ("hip hop", "A graffiti-covered city block at golden hour with street art murals and a boombox glow"),
    ("classical", "An ornate concert hall with gilded balconies and velvet curtains, in a painterly classical style"),
    ("funk", "A retro seventies dance floor with a mirror ball and groovy geometric patterns"),
    ("cinematic", "A sweeping cinematic vista with dramatic skies and epic widescreen framing"),
    ("synth pop", "A retro-futuristic eighties skyline with chrome grids and sunset gradients"),
    ("indie pop", "A sunlit bedroom-pop collage with polaroid textures and pastel paper cutouts"),
    ("blues", "A smoky late-night juke joint with dim lamps and worn wooden floorboards"),
    ("reggae", "A breezy beachside yard with palm shadows and sun-washed murals"),
    ("bossa nova", "A seaside cafe terrace in Rio at sunset with mosaic sidewalks"),
    ("techno", "A dark industrial warehouse rave with strobing lasers and concrete pillars"),
    ("acoustic", "A quiet front porch at golden hour with string lights and wildflowers"),
    ("chillhop", "A rooftop garden at twilight with hanging plants and city lights below, in a soft illustrated style"),
    ("soul", "A vintage recording studio with warm tube lights and velvet textures"),
    ("world", "A vibrant open-air market square with patterned textiles and lanterns"),
];
const GENERIC_SETTING: &str = "A sweeping cinematic setting with dramatic, atmospheric scenery";

const TEMPO_CLAUSES: [(TempoClass, &str); 3] = [
    (TempoClass::Slow, "flowing, graceful movements with smooth light trails and gentle undulating patterns"),
    (TempoClass::Medium, "rhythmic, measured movements with steady light pulses and balanced visual flow"),
    (TempoClass::Fast, "rapid, energetic movements with sharp light trails, motion blur, and dynamic speed lines"),
];

/// Hue and tint terms per valence.
pub const VALENCE_PALETTES: [(Valence, &str); 3] = [
    (Valence::Negative, "a cool color palette of deep blues, teal and muted violet"),
    (Valence::Neutral, "a balanced, natural color palette with soft neutral tints"),
    (Valence::Positive, "a warm color palette of golden yellows, energetic oranges and magenta"),
];

/// Brightness and saturation terms per energy level.
pub const ENERGY_LIGHTING: [(Energy, &str); 3] = [
    (Energy::Low, "dim and softly desaturated, with gentle shadows"),
    (Energy::Medium, "moderately lit with balanced saturation"),
    (Energy::High, "bright and highly saturated, with vivid highlights"),
];

const EMOTION_EXPRESSIONS: &[(&[&str], &str)] = &[
    (&["joyful", "cheerful", "uplifting", "happy", "playful", "optimistic"], "joyful expression with bright, sparkling eyes and an uplifted, confident posture"),
    (&["calm", "serene", "peaceful", "dreamy", "relaxed"], "serene expression with peaceful, steady eyes and relaxed, flowing posture"),
    (&["energetic", "driving", "intense", "dramatic"], "enthusiastic expression with intense, focused eyes and dynamic, powerful gestures"),
    (&["mysterious", "tense", "dark"], "enigmatic expression with knowing, slightly narrowed eyes and graceful, controlled movements"),
    (&["melancholic", "nostalgic", "sad", "wistful"], "wistful expression with soft, downcast eyes and a gently lowered posture"),
    (&["romantic", "warm", "hopeful", "tender"], "tender expression with warm, hopeful eyes and an open, gentle posture"),
];

fn lookup<K: PartialEq + Copy>(table: &[(K, &'static str)], key: K) -> &'static str {
    table.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).expect("table covers every value")
}

pub fn genre_setting(genre: &str) -> Option<&'static str> {
    let g = genre.trim().to_lowercase();
    GENRE_SETTINGS.iter().find(|(k, _)| *k == g).map(|(_, v)| *v)
}

fn size_word(i: usize, prominence: f64, top: f64) -> &'static str {
    let rel = if top > 0.0 { prominence / top } else { 1.0 };
    match (i, rel) {
        (0, _) => "towering large",
        (_, r) if r >= 0.75 => "large",
        (_, r) if r >= 0.4 => "medium-sized",
        _ => "small",
    }
}

/// One clause per row, in row order.
pub fn map_attributes(attrs: &MusicAttributes) -> Vec<(StyleRow, String)> {
    let mut out = Vec::with_capacity(6);
    let setting = genre_setting(&attrs.genre).unwrap_or_else(|| {
        tracing::info!(genre = %attrs.genre, "no setting for genre, using generic cinematic setting");
        GENERIC_SETTING
    });
    out.push((StyleRow::Genre, format!("{setting}, in a {} art style.", attrs.genre.trim().to_lowercase())));
    if !attrs.instruments.is_empty() {
        let top = attrs.instruments[0].prominence;
        let parts: Vec<String> = attrs
            .instruments
            .iter()
            .enumerate()
            .map(|(i, ins)| format!("a {} {}", size_word(i, ins.prominence, top), ins.name))
            .collect();
        out.push((
            StyleRow::Instruments,
            format!(
                "The protagonist performs with {}, each instrument sized by its prominence in the music.",
                parts.join(", ")
            ),
        ));
    }
    out.push((
        StyleRow::Tempo,
        format!("Implied motion: {}.", lookup(&TEMPO_CLAUSES, attrs.tempo_class)),
    ));
    if !attrs.emotion.trim().is_empty() {
        let e = attrs.emotion.trim().to_lowercase();
        let expr = EMOTION_EXPRESSIONS
            .iter()
            .find(|(keys, _)| keys.iter().any(|k| e.contains(k)))
            .map(|(_, v)| (*v).to_string())
            .unwrap_or_else(|| format!("{e} expression and body language"));
        out.push((StyleRow::Emotion, format!("The protagonist shows a {expr}.")));
    }
    out.push((
        StyleRow::Valence,
        format!("The scene is tinted with {}.", lookup(&VALENCE_PALETTES, attrs.valence)),
    ));
    out.push((
        StyleRow::Energy,
        format!("The image is {}.", lookup(&ENERGY_LIGHTING, attrs.energy)),
    ));
    out
}

/// `anchor + " " + clauses + " " + suffix`; clauses are space-joined.
pub fn fuse_prompt(anchor: &VisualAnchor, clauses: &[String], suffix: &str) -> String {
    let mut parts = vec![anchor.description.trim().to_string()];
    if !clauses.is_empty() {
        parts.push(clauses.join(" "));
    }
    if !suffix.trim().is_empty() {
        parts.push(suffix.trim().to_string());
    }
    parts.join(" ")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThumbnailSpec {
    pub anchor: VisualAnchor,
    pub attributes: MusicAttributes,
    pub style_clauses: Vec<String>,
    pub fused_prompt: String,
    pub style_suffix: String,
    pub lexicon_version: String,
    /// Built by the plain prompt-plus-audio recipe instead of the mapping.
    #[serde(default)]
    pub baseline: bool,
}

impl ThumbnailSpec {
    pub fn build(anchor: VisualAnchor, attributes: MusicAttributes, style_suffix: &str) -> Result<Self> {
        if anchor.description.trim().is_empty() {
            return Err(EngineError::Precondition("anchor description is empty".into()));
        }
        attributes.check()?;
        let style_clauses: Vec<String> = map_attributes(&attributes).into_iter().map(|(_, c)| c).collect();
        let fused_prompt = fuse_prompt(&anchor, &style_clauses, style_suffix);
        Ok(Self {
            anchor,
            attributes,
            style_clauses,
            fused_prompt,
            style_suffix: style_suffix.to_string(),
            lexicon_version: LEXICON_VERSION.into(),
            baseline: false,
        })
    }

    /// The motion clause, reused for the animation request.
    pub fn motion_clause(&self) -> &'static str {
        lookup(&TEMPO_CLAUSES, self.attributes.tempo_class)
    }

    pub fn animation_prompt(&self) -> String {
        format!(
            "Animate this image into a seamless {}-second loop. Motion: {}. {}",
            seconds_text(ANIMATION_SECONDS),
            self.motion_clause(),
            self.fused_prompt
        )
    }
}

const HIGH_WORDS: &[&str] = &["high energy", "energetic", "intense", "driving", "upbeat", "powerful"];
const LOW_WORDS: &[&str] = &["low energy", "calm", "mellow", "gentle", "soft", "relaxed", "quiet"];
const POSITIVE_WORDS: &[&str] = &["positive valence", "uplifting", "cheerful", "joyful", "hopeful", "playful", "optimistic", "happy", "warm"];
const NEGATIVE_WORDS: &[&str] = &["negative valence", "melancholic", "sad", "dark", "tense", "gloomy", "somber"];

fn any_term(text: &str, words: &[&str]) -> bool {
    words.iter().any(|w| find_word(text, w).is_some())
}

/// Reads attribute classes from a track's analysis with keyword rules.
pub fn attributes_from_analysis(analysis: &MusicAnalysis) -> MusicAttributes {
    let detailed = analysis.detailed_description.to_lowercase();
    let everything = format!("{} {}", detailed, analysis.image_description.to_lowercase());
    let tag = |c: TagCategory| {
        analysis
            .tags
            .iter()
            .find(|t| t.category == c)
            .map(|t| t.label.trim().to_lowercase())
    };

    let genre = tag(TagCategory::Genre)
        .filter(|g| genre_setting(g).is_some())
        .or_else(|| lexicon_mentions(&detailed, &[lexicon::GENRES]).into_iter().next())
        .or_else(|| tag(TagCategory::Genre))
        .unwrap_or_else(|| "cinematic".into());

    let mut names: Vec<String> = tag(TagCategory::Instrument).into_iter().collect();
    for m in lexicon_mentions(&everything, &[lexicon::INSTRUMENTS]) {
        if !names.contains(&m) {
            names.push(m);
        }
    }
    if names.is_empty() {
        names.push("instrument".into());
    }
    let instruments = names
        .into_iter()
        .enumerate()
        .map(|(i, name)| Instrument { name, prominence: 1.0 / (i as f64 + 1.0) })
        .collect();

    let bpm = Regex::new(r"(\d{2,3})\s*bpm")
        .expect("static regex")
        .captures(&detailed)
        .and_then(|c| c[1].parse::<u32>().ok());
    let tempo_class = match bpm {
        Some(b) if b >= FAST_BPM => TempoClass::Fast,
        Some(b) if b <= SLOW_BPM => TempoClass::Slow,
        Some(_) => TempoClass::Medium,
        None if any_term(&detailed, &["fast", "rapid", "uptempo"]) => TempoClass::Fast,
        None if any_term(&detailed, &["slow", "unhurried"]) => TempoClass::Slow,
        None => TempoClass::Medium,
    };

    let emotion = tag(TagCategory::Mood).unwrap_or_default();
    let valence = if detailed.contains("positive valence") {
        Valence::Positive
    } else if detailed.contains("negative valence") {
        Valence::Negative
    } else if detailed.contains("neutral valence") {
        Valence::Neutral
    } else if any_term(&format!("{emotion} {detailed}"), POSITIVE_WORDS) {
        Valence::Positive
    } else if any_term(&format!("{emotion} {detailed}"), NEGATIVE_WORDS) {
        Valence::Negative
    } else {
        Valence::Neutral
    };
    let energy = if detailed.contains("high energy") {
        Energy::High
    } else if detailed.contains("low energy") {
        Energy::Low
    } else if detailed.contains("medium energy") {
        Energy::Medium
    } else if any_term(&detailed, HIGH_WORDS) {
        Energy::High
    } else if any_term(&detailed, LOW_WORDS) {
        Energy::Low
    } else {
        Energy::Medium
    };
    MusicAttributes { genre, instruments, tempo_class, emotion, valence, energy }
}

fn ensure_period(s: &str) -> String {
    let s = s.trim();
    if s.ends_with(['.', '!', '?']) {
        s.to_string()
    } else {
        format!("{s}.")
    }
}

const LIKENESS_TERMS: &[&str] = &["photorealistic", "photo-realistic", "photograph of", "likeness", "real-life"];

/// Normalizes one proposed anchor. Human subjects become stylized avatars.
pub fn anchor_from_draft(index: usize, draft: &schema::AnchorDraft) -> Option<VisualAnchor> {
    let kind = match draft.kind.to_lowercase().replace([' ', '-'], "_").as_str() {
        "character" => AnchorKind::Character,
        "human_avatar" | "human" | "person" => AnchorKind::HumanAvatar,
        "object_theme" | "object" | "theme" => AnchorKind::ObjectTheme,
        _ => return None,
    };
    let mut description = draft.description.trim().to_string();
    if description.is_empty() {
        return None;
    }
    if kind == AnchorKind::HumanAvatar {
        for t in LIKENESS_TERMS {
            while let Some(pos) = description.to_lowercase().find(t) {
                description.replace_range(pos..pos + t.len(), "");
            }
        }
        description = description.split_whitespace().collect::<Vec<_>>().join(" ");
        if !description.to_lowercase().contains("stylized avatar") {
            description = format!("A stylized avatar of {}", lowercase_first(&description));
        }
    }
    Some(VisualAnchor {
        id: format!("anchor-{}", index + 1),
        kind,
        description: ensure_period(&description),
        source_scene_id: draft.scene_id,
    })
}

fn lowercase_first(s: &str) -> String {
    let s = s.strip_prefix("A ").or_else(|| s.strip_prefix("An ")).map(|r| format!("a {r}")).unwrap_or_else(|| s.to_string());
    let mut c = s.chars();
    c.next().map(|f| f.to_lowercase().chain(c).collect()).unwrap_or_default()
}

pub fn fallback_anchor() -> VisualAnchor {
    VisualAnchor {
        id: "anchor-fallback".into(),
        kind: AnchorKind::ObjectTheme,
        description: FALLBACK_ANCHOR.into(),
        source_scene_id: None,
    }
}

/// Up to three recurring subjects of the video.
pub async fn extract_anchors(
    providers: &Providers,
    project: &Project,
    input: Option<&VideoInput>,
) -> Result<Vec<VisualAnchor>> {
    let duration = project.video.as_ref().map(|v| v.duration).unwrap_or(0.0);
    let summary = if project.scenes.is_empty() {
        "(not segmented)".to_string()
    } else {
        project
            .scenes
            .iter()
            .map(|s| format!("{}. {} ({})", s.scene_id, s.description, s.vibe))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let vars = Variables::new()
        .text("title", &project.title)
        .text("videoType", &project.video_type)
        .text("audience", &project.audience)
        .text("videoDuration", seconds_text(duration))
        .text("sceneSummary", summary);
    let attachments: Vec<Attachment> = input
        .map(|v| vec![Attachment::video(v.mime.clone(), v.bytes.clone())])
        .unwrap_or_default();
    let drafts = match ask(providers, TemplateId::VisualAnchors, &vars, &attachments, DEFAULT_RETRIES, schema::parse_anchors).await {
        Ok(Ok(d)) => d,
        Ok(Err(r)) => return Err(EngineError::AnchorExtractionFailed(r.violation.to_string())),
        Err(EngineError::Provider(e)) => return Err(EngineError::AnchorExtractionFailed(e.to_string())),
        Err(e) => return Err(e),
    };
    let mut anchors: Vec<VisualAnchor> = Vec::new();
    for d in &drafts {
        if anchors.len() == MAX_ANCHORS {
            break;
        }
        if let Some(a) = anchor_from_draft(anchors.len(), d) {
            if !anchors.iter().any(|b| b.description.eq_ignore_ascii_case(&a.description)) {
                anchors.push(a);
            }
        }
    }
    if anchors.is_empty() {
        return Err(EngineError::AnchorExtractionFailed("no usable anchors".into()));
    }
    Ok(anchors)
}

/// The anchor for a track: one from its scene if any, else the project's first.
pub fn anchor_for_track(project: &Project, scene_id: Option<SceneId>) -> VisualAnchor {
    project
        .anchors
        .iter()
        .find(|a| a.source_scene_id.is_some() && a.source_scene_id == scene_id)
        .or_else(|| project.anchors.first())
        .cloned()
        .unwrap_or_else(fallback_anchor)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    prompt: &'a str,
    lexicon_version: &'a str,
    anchor_id: &'a str,
    attributes: &'a MusicAttributes,
    baseline: bool,
}

/// Renders the still and writes the provenance sidecar next to it.
pub async fn render_static(providers: &Providers, store: &AssetStore, spec: &ThumbnailSpec) -> Result<AssetRef> {
    let image = providers
        .generate_image(store, &spec.fused_prompt)
        .await
        .map_err(|e| EngineError::ThumbnailFailed(e.to_string()))?;
    let sidecar = Sidecar {
        prompt: &spec.fused_prompt,
        lexicon_version: &spec.lexicon_version,
        anchor_id: &spec.anchor.id,
        attributes: &spec.attributes,
        baseline: spec.baseline,
    };
    let body = serde_json::to_vec_pretty(&sidecar).expect("sidecar serializes");
    store.put_sidecar(&image, SIDECAR_SUFFIX, &body)?;
    Ok(image)
}

/// An eight-second loop that starts from the still.
pub async fn render_animated(
    providers: &Providers,
    store: &AssetStore,
    still: Option<&AssetRef>,
    spec: &ThumbnailSpec,
) -> Result<ClipRef> {
    let still = still.ok_or_else(|| EngineError::Precondition("track has no static thumbnail yet".into()))?;
    providers
        .animate_image(store, Some(still), &spec.animation_prompt(), ANIMATION_SECONDS)
        .await
        .map_err(|e| EngineError::ThumbnailFailed(format!("animation failed: {e}")))
}

/// Builds the spec for a track from its analysis and the project's anchor.
pub fn spec_for_track(project: &Project, track: &Track, style_suffix: &str) -> Result<ThumbnailSpec> {
    let analysis = track
        .analysis
        .as_ref()
        .ok_or_else(|| EngineError::Precondition(format!("track {} has not been analysed", track.id)))?;
    ThumbnailSpec::build(
        anchor_for_track(project, track.scene_id),
        attributes_from_analysis(analysis),
        style_suffix,
    )
}

/// The comparison recipe: the model hears the prompt and the audio only.
pub async fn baseline_spec(
    providers: &Providers,
    store: &AssetStore,
    track: &Track,
    style_suffix: &str,
) -> Result<ThumbnailSpec> {
    let audio = store.get(&track.audio.path)?;
    let vars = Variables::new().text("originalPrompt", &track.full_prompt);
    let prompt = ask(
        providers,
        TemplateId::BaselineThumbnail,
        &vars,
        &[Attachment::wav(audio)],
        DEFAULT_RETRIES,
        schema::parse_image_prompt,
    )
    .await?
    .map_err(|r| EngineError::ThumbnailFailed(r.violation.to_string()))?;
    let anchor = VisualAnchor {
        id: "baseline".into(),
        kind: AnchorKind::ObjectTheme,
        description: ensure_period(&prompt),
        source_scene_id: None,
    };
    let attributes = track
        .analysis
        .as_ref()
        .map(attributes_from_analysis)
        .unwrap_or(MusicAttributes {
            genre: "cinematic".into(),
            instruments: vec![Instrument { name: "instrument".into(), prominence: 1.0 }],
            tempo_class: TempoClass::Medium,
            emotion: String::new(),
            valence: Valence::Neutral,
            energy: Energy::Medium,
        });
    let fused_prompt = fuse_prompt(&anchor, &[], style_suffix);
    Ok(ThumbnailSpec {
        anchor,
        attributes,
        style_clauses: Vec::new(),
        fused_prompt,
        style_suffix: style_suffix.to_string(),
        lexicon_version: LEXICON_VERSION.into(),
        baseline: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_lexicon_genre_has_a_setting() {
        for g in lexicon::GENRES {
            assert!(genre_setting(g).is_some(), "{g}");
        }
        let settings: std::collections::HashSet<_> = GENRE_SETTINGS.iter().map(|(_, s)| s).collect();
        assert_eq!(settings.len(), GENRE_SETTINGS.len());
    }

    #[test]
    fn human_anchor_becomes_avatar() {
        let d = schema::AnchorDraft {
            kind: "human_avatar".into(),
            description: "A photorealistic woman with red hair".into(),
            scene_id: Some(1),
        };
        let a = anchor_from_draft(0, &d).unwrap();
        assert_eq!(a.kind, AnchorKind::HumanAvatar);
        assert_eq!(a.description, "A stylized avatar of a woman with red hair.");
    }
}
