//! Video scene segmentation and per-track music analysis.

use std::collections::HashSet;

use soundstage_core::assets::AssetStore;
use soundstage_core::lexicon;
use soundstage_core::model::{MusicAnalysis, Project, SceneSegment, Track, VideoAsset};
use soundstage_core::templates::{TemplateId, Variables};
use soundstage_providers::{Attachment, Providers};

use crate::ask::{ask, seconds_text};
use crate::error::{EngineError, Result};
use crate::schema::{self, VideoAnalysis};

pub use crate::schema::{format_timestamp, parse_timestamp};

/// Upper bound on keywords surfaced per track.
pub const MAX_REUSABLE_KEYWORDS: usize = 6;
pub const DEFAULT_PROTAGONIST: &str = "the main character of the video";

/// Raw video for models that can watch it.
#[derive(Clone, Debug)]
pub struct VideoInput {
    pub mime: String,
    pub bytes: Vec<u8>,
}

pub async fn analyze_video(
    providers: &Providers,
    video: &VideoAsset,
    input: Option<&VideoInput>,
    retries: u32,
) -> Result<VideoAnalysis> {
    if !(video.duration > 0.0) {
        return Err(EngineError::Precondition("video duration unknown".into()));
    }
    let vars = Variables::new().text("videoDuration", seconds_text(video.duration));
    let attachments: Vec<Attachment> = input
        .map(|v| vec![Attachment::video(v.mime.clone(), v.bytes.clone())])
        .unwrap_or_default();
    let duration = video.duration;
    ask(providers, TemplateId::VideoAnalysis, &vars, &attachments, retries, |t| {
        schema::parse_video_analysis(t, duration)
    })
    .await?
    .map_err(|r| EngineError::AnalysisFailed { violation: r.violation, attempts: r.attempts })
}

/// Scene segments with embedded vibes, clamped to the video.
pub async fn scenes_from_analysis(
    providers: &Providers,
    analysis: &VideoAnalysis,
    video_duration: f64,
) -> Result<Vec<SceneSegment>> {
    let n = analysis.scenes.len();
    let mut out = Vec::with_capacity(n);
    for (i, d) in analysis.scenes.iter().enumerate() {
        let start = if i == 0 { 0.0 } else { out.last().map(|s: &SceneSegment| s.end).unwrap_or(d.start) };
        let end = if i + 1 == n { video_duration } else { d.end.min(video_duration) };
        let vibe_embedding = providers.embed_text(&format!("{} {}", d.vibe, d.description)).await?;
        out.push(SceneSegment {
            scene_id: i as u32 + 1,
            start,
            end,
            description: d.description.clone(),
            vibe: d.vibe.clone(),
            vibe_embedding,
            keyword_pools: d.keyword_pools.clone(),
        });
    }
    Ok(out)
}

/// Template variables for analysing a track against its project and scene.
pub fn track_variables(project: &Project, track: &Track, scene: Option<&SceneSegment>) -> Variables {
    let protagonist = project
        .anchors
        .first()
        .map(|a| a.description.clone())
        .unwrap_or_else(|| DEFAULT_PROTAGONIST.to_string());
    let (desc, vibe, start, end) = match scene {
        Some(s) => (s.description.clone(), s.vibe.clone(), s.start, s.end),
        None => ("whole video".to_string(), project.soundtrack_goal.clone(), 0.0, track.audio.duration),
    };
    Variables::new()
        .text("originalPrompt", &track.full_prompt)
        .text("title", &project.title)
        .text("videoType", &project.video_type)
        .text("audience", &project.audience)
        .text("soundtrackGoal", &project.soundtrack_goal)
        .text("protagonist", protagonist)
        .text("sceneDescription", desc)
        .text("sceneVibe", vibe)
        .text("sceneDuration", seconds_text(end - start))
        .text("sceneStart", seconds_text(start))
        .text("sceneEnd", seconds_text(end))
}

pub async fn analyze_track(
    providers: &Providers,
    store: &AssetStore,
    project: &Project,
    track: &Track,
    retries: u32,
) -> Result<MusicAnalysis> {
    let scene = match track.scene_id {
        Some(id) => Some(project.scene(id)?),
        None => None,
    };
    let vars = track_variables(project, track, scene);
    let audio = store.get(&track.audio.path)?;
    ask(
        providers,
        TemplateId::MusicAnalysis,
        &vars,
        &[Attachment::wav(audio)],
        retries,
        schema::parse_music_analysis,
    )
    .await?
    .map_err(|r| EngineError::AnalysisFailed { violation: r.violation, attempts: r.attempts })
}

fn title_case(s: &str) -> String {
    s.split(' ')
        .map(|w| {
            let mut c = w.chars();
            c.next().map(|f| f.to_uppercase().chain(c).collect::<String>()).unwrap_or_default()
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lexicon terms mentioned in `text`, by first mention.
pub(crate) fn lexicon_mentions(text: &str, lists: &[&[&str]]) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut hits: Vec<(usize, &str)> = Vec::new();
    for list in lists {
        for term in *list {
            if let Some(pos) = find_word(&lower, term) {
                hits.push((pos, term));
            }
        }
    }
    hits.sort();
    hits.into_iter().map(|(_, t)| t.to_string()).collect()
}

/// Byte offset of `term` in `hay` as a whole word.
pub(crate) fn find_word(hay: &str, term: &str) -> Option<usize> {
    let mut from = 0;
    while let Some(off) = hay[from..].find(term) {
        let pos = from + off;
        let before = hay[..pos].chars().next_back();
        let after = hay[pos + term.len()..].chars().next();
        let edge = |c: Option<char>| c.is_none_or(|c| !c.is_alphanumeric());
        if edge(before) && edge(after) {
            return Some(pos);
        }
        from = pos + term.len();
    }
    None
}

/// Attributes of the track worth offering back as prompt keywords: the tag
/// labels, then genres, instruments and moods named in the detailed
/// description, minus anything the prompt or title already says.
pub fn reusable_keywords(analysis: &MusicAnalysis, user_prompt: &str, title: &str) -> Vec<String> {
    let existing = format!("{} {}", user_prompt, title).to_lowercase();
    let mut candidates: Vec<String> = analysis.tags.iter().map(|t| t.label.clone()).collect();
    candidates.extend(
        lexicon_mentions(
            &analysis.detailed_description,
            &[lexicon::GENRES, lexicon::INSTRUMENTS, lexicon::MOODS],
        )
        .into_iter()
        .map(|t| title_case(&t)),
    );
    let mut seen = HashSet::new();
    candidates
        .into_iter()
        .filter(|c| {
            let l = c.trim().to_lowercase();
            !l.is_empty() && !existing.contains(&l) && seen.insert(l)
        })
        .take(MAX_REUSABLE_KEYWORDS)
        .collect()
}
