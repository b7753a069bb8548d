use std::fmt;

use serde::{Deserialize, Serialize};

use crate::assets::AssetRef;
use crate::audiokit::AudioAsset;
use crate::Embedding;

macro_rules! id_type {
    ($name:ident) => {
        #[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }
    };
}

id_type!(ProjectId);
id_type!(TrackId);

pub type SceneId = u32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoAsset {
    pub path: Option<AssetRef>,
    pub duration: f64,
    pub frame_rate: f64,
}

/// Suggestion keywords for one scene, one list per category.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KeywordPools {
    pub genres: Vec<String>,
    pub instruments: Vec<String>,
    pub moods: Vec<String>,
    pub energy: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeywordCategory {
    Genres,
    Instruments,
    Moods,
    Energy,
}

impl KeywordCategory {
    pub const ALL: [KeywordCategory; 4] = [
        KeywordCategory::Genres,
        KeywordCategory::Instruments,
        KeywordCategory::Moods,
        KeywordCategory::Energy,
    ];
}

impl KeywordPools {
    /// Builds pools with whitespace-normalized, case-insensitively unique entries.
    pub fn new(
        genres: Vec<String>,
        instruments: Vec<String>,
        moods: Vec<String>,
        energy: Vec<String>,
    ) -> Self {
        Self {
            genres: dedupe_keywords(genres),
            instruments: dedupe_keywords(instruments),
            moods: dedupe_keywords(moods),
            energy: dedupe_keywords(energy),
        }
    }

    pub fn category(&self, category: KeywordCategory) -> &[String] {
        match category {
            KeywordCategory::Genres => &self.genres,
            KeywordCategory::Instruments => &self.instruments,
            KeywordCategory::Moods => &self.moods,
            KeywordCategory::Energy => &self.energy,
        }
    }

    pub fn is_empty(&self) -> bool {
        KeywordCategory::ALL.iter().any(|c| self.category(*c).is_empty())
    }

    pub fn min_len(&self) -> usize {
        KeywordCategory::ALL
            .iter()
            .map(|c| self.category(*c).len())
            .min()
            .unwrap_or(0)
    }
}

pub fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn dedupe_keywords(list: Vec<String>) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    list.into_iter()
        .map(|k| normalize_ws(&k))
        .filter(|k| !k.is_empty() && seen.insert(k.to_lowercase()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSegment {
    pub scene_id: SceneId,
    pub start: f64,
    pub end: f64,
    pub description: String,
    pub vibe: String,
    pub vibe_embedding: Embedding,
    pub keyword_pools: KeywordPools,
}

impl SceneSegment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Scene fit, optional taste fit, and their blend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub scene_fit: f64,
    pub taste_fit: Option<f64>,
    pub alpha: f64,
    pub total: f64,
}

impl ScoreBreakdown {
    /// `alpha * scene + (1 - alpha) * taste`, or `scene` alone without a taste fit.
    pub fn compose(scene_fit: f64, taste_fit: Option<f64>, alpha: f64) -> Self {
        let total = match taste_fit {
            Some(taste) => alpha * scene_fit + (1.0 - alpha) * taste,
            None => scene_fit,
        };
        Self {
            scene_fit,
            taste_fit,
            alpha,
            total,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TasteProfile {
    pub saved_embeddings: Vec<Embedding>,
    pub prior: Option<Embedding>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub scene_id: SceneId,
    pub track_id: TrackId,
    pub alternative_index: usize,
    pub active: bool,
    pub fade_in_ms: u32,
    pub fade_out_ms: u32,
    /// The track audio with this placement's fades applied, when rendered.
    #[serde(default)]
    pub rendered_audio: Option<AssetRef>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineageKind {
    Fresh,
    Edit,
    Vary,
    Blend,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lineage {
    pub kind: LineageKind,
    pub parent_ids: Vec<TrackId>,
    /// The user's request (edit) that produced the track.
    pub instruction: Option<String>,
    /// The plan emphasis (edit/blend) that produced the track.
    #[serde(default)]
    pub emphasis: Option<String>,
}

impl Lineage {
    pub fn fresh() -> Self {
        Self {
            kind: LineageKind::Fresh,
            parent_ids: Vec::new(),
            instruction: None,
            emphasis: None,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        let n = self.parent_ids.len();
        let ok = match self.kind {
            LineageKind::Fresh => n == 0,
            LineageKind::Edit | LineageKind::Vary => n == 1,
            LineageKind::Blend => n >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("{:?} lineage with {n} parents", self.kind))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagCategory {
    Genre,
    Mood,
    Instrument,
}

impl TagCategory {
    pub const ALL: [TagCategory; 3] = [TagCategory::Genre, TagCategory::Mood, TagCategory::Instrument];

    /// Display color fixed per category.
    pub const fn color(self) -> &'static str {
        match self {
            TagCategory::Genre => "#8B5CF6",
            TagCategory::Mood => "#10B981",
            TagCategory::Instrument => "#06B6D4",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TagCategory::Genre => "genre",
            TagCategory::Mood => "mood",
            TagCategory::Instrument => "instrument",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromTag {
    pub label: String,
    pub category: TagCategory,
    pub color: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitVerdict {
    Good,
    Bad,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitCheck {
    pub verdict: FitVerdict,
    pub reasons: Vec<String>,
}

/// Structured description of one generated track.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MusicAnalysis {
    pub fit: FitCheck,
    pub tags: Vec<PromTag>,
    pub image_description: String,
    pub detailed_description: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorKind {
    Character,
    HumanAvatar,
    ObjectTheme,
}

/// Recurring subject reused across a project's thumbnails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisualAnchor {
    pub id: String,
    pub kind: AnchorKind,
    pub description: String,
    pub source_scene_id: Option<SceneId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipRef {
    pub asset: AssetRef,
    pub duration_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: TrackId,
    pub user_prompt: String,
    pub modifier: String,
    pub full_prompt: String,
    pub title: String,
    /// Scene the track was generated for, when any.
    #[serde(default)]
    pub scene_id: Option<SceneId>,
    pub audio: AudioAsset,
    pub embedding: Embedding,
    pub score: ScoreBreakdown,
    pub analysis: Option<MusicAnalysis>,
    pub static_thumbnail: Option<AssetRef>,
    pub animated_thumbnail: Option<ClipRef>,
    pub lineage: Lineage,
}

/// `user_prompt` and `modifier` joined by one space (modifier omitted when empty).
pub fn join_prompt(user_prompt: &str, modifier: &str) -> String {
    let modifier = normalize_ws(modifier);
    if modifier.is_empty() {
        user_prompt.to_string()
    } else {
        format!("{user_prompt} {modifier}")
    }
}

impl Track {
    pub fn check(&self) -> Result<(), String> {
        self.lineage.check()?;
        if self.full_prompt != join_prompt(&self.user_prompt, &self.modifier) {
            return Err(format!(
                "full_prompt {:?} is not user_prompt + modifier",
                self.full_prompt
            ));
        }
        if !self.score.total.is_finite() {
            return Err("non-finite score".into());
        }
        Ok(())
    }

    pub fn good_fit(&self) -> bool {
        matches!(&self.analysis, Some(a) if a.fit.verdict == FitVerdict::Good)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_composition() {
        let s = ScoreBreakdown::compose(0.8, Some(0.2), 0.25);
        assert!((s.total - (0.25 * 0.8 + 0.75 * 0.2)).abs() < 1e-15);
        assert_eq!(ScoreBreakdown::compose(0.3, None, 0.0).total, 0.3);
    }

    #[test]
    fn lineage_arity() {
        let mut l = Lineage::fresh();
        assert!(l.check().is_ok());
        l.kind = LineageKind::Blend;
        l.parent_ids = vec!["a".into()];
        assert!(l.check().is_err());
        l.parent_ids.push("b".into());
        assert!(l.check().is_ok());
    }

    #[test]
    fn tag_colors() {
        assert_eq!(TagCategory::Genre.color(), "#8B5CF6");
        assert_eq!(TagCategory::Mood.color(), "#10B981");
        assert_eq!(TagCategory::Instrument.color(), "#06B6D4");
    }

    #[test]
    fn pools_dedupe_case_insensitively() {
        let p = KeywordPools::new(
            vec!["Jazz".into(), " jazz ".into(), "Lo-fi  beats".into()],
            vec!["piano".into()],
            vec![],
            vec!["fast".into()],
        );
        assert_eq!(p.genres, vec!["Jazz", "Lo-fi beats"]);
        assert!(p.is_empty());
    }

    #[test]
    fn prompt_join_normalizes() {
        assert_eq!(join_prompt("piano solo", "  jazz   swing "), "piano solo jazz swing");
        assert_eq!(join_prompt("piano solo", ""), "piano solo");
    }
}
