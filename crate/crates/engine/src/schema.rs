//! Strict parsing of language-model JSON responses. Every rejection names the
//! rule it broke so retries can feed it back and tests can assert on it.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use soundstage_core::model::{FitCheck, FitVerdict, KeywordPools, MusicAnalysis, PromTag, TagCategory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    MalformedJson,
    MissingField,
    SceneCount,
    SceneTimestamp,
    SceneOverlap,
    SceneGap,
    SceneCoverage,
    SceneDuration,
    KeywordPool,
    OverallKeywords,
    TagCount,
    TagCategories,
    TagColor,
    TagLabel,
    FitVerdict,
    FitReasonCount,
    FitReasonWords,
    ImageDescriptionSentences,
    DetailedDescription,
    EditVariationCount,
    EditTitleWords,
    EditDescription,
    BlendVariationCount,
    BlendCommonDescription,
    BlendVariationText,
    ModifierList,
    AnchorList,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::MalformedJson => "malformed_json",
            Rule::MissingField => "missing_field",
            Rule::SceneCount => "scene_count",
            Rule::SceneTimestamp => "scene_timestamp",
            Rule::SceneOverlap => "scene_overlap",
            Rule::SceneGap => "scene_gap",
            Rule::SceneCoverage => "scene_coverage",
            Rule::SceneDuration => "scene_duration",
            Rule::KeywordPool => "keyword_pool",
            Rule::OverallKeywords => "overall_keywords",
            Rule::TagCount => "tag_count",
            Rule::TagCategories => "tag_categories",
            Rule::TagColor => "tag_color",
            Rule::TagLabel => "tag_label",
            Rule::FitVerdict => "fit_verdict",
            Rule::FitReasonCount => "fit_reason_count",
            Rule::FitReasonWords => "fit_reason_words",
            Rule::ImageDescriptionSentences => "image_description_sentences",
            Rule::DetailedDescription => "detailed_description",
            Rule::EditVariationCount => "edit_variation_count",
            Rule::EditTitleWords => "edit_title_words",
            Rule::EditDescription => "edit_description",
            Rule::BlendVariationCount => "blend_variation_count",
            Rule::BlendCommonDescription => "blend_common_description",
            Rule::BlendVariationText => "blend_variation_text",
            Rule::ModifierList => "modifier_list",
            Rule::AnchorList => "anchor_list",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub message: String,
}

impl Violation {
    pub fn new(rule: Rule, message: impl Into<String>) -> Self {
        Self { rule, message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule `{}` violated: {}", self.rule, self.message)
    }
}

impl std::error::Error for Violation {}

pub type Checked<T> = Result<T, Violation>;

pub const MIN_SCENES: usize = 2;
pub const MAX_SCENES: usize = 6;
pub const MIN_SCENE_S: f64 = 15.0;
pub const MAX_SCENE_S: f64 = 60.0;
/// Allowed error on scene lengths; model timestamps are coarse.
pub const SCENE_SLACK_S: f64 = 2.0;
/// Allowed gap or overlap between consecutive scenes.
pub const TILING_SLACK_S: f64 = 0.5;
pub const MIN_POOL_KEYWORDS: usize = 5;
pub const OVERALL_KEYWORDS: usize = 4;
pub const FIT_REASON_WORDS: (usize, usize) = (4, 7);
pub const EDIT_TITLE_WORDS: (usize, usize) = (2, 4);
pub const PLAN_VARIATIONS: usize = 4;

/// Whitespace-delimited tokens; hyphenated compounds count once.
pub fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Sentences ended by `.`, `!` or `?` (or the end of text).
pub fn sentence_count(s: &str) -> usize {
    let mut count = 0;
    let mut in_sentence = false;
    let chars: Vec<char> = s.chars().collect();
    for (i, c) in chars.iter().enumerate() {
        if matches!(c, '.' | '!' | '?') {
            let at_boundary = chars.get(i + 1).is_none_or(|n| n.is_whitespace());
            if at_boundary && in_sentence {
                count += 1;
                in_sentence = false;
            }
        } else if !c.is_whitespace() {
            in_sentence = true;
        }
    }
    count + usize::from(in_sentence)
}

/// `MM:SS`, `H:MM:SS` or plain seconds, fractions allowed in the last field.
pub fn parse_timestamp(s: &str) -> Option<f64> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    if parts.is_empty() || parts.len() > 3 || parts.iter().any(|p| p.trim().is_empty()) {
        return None;
    }
    let (last, rest) = parts.split_last()?;
    let secs: f64 = last.trim().parse().ok().filter(|v: &f64| v.is_finite() && *v >= 0.0)?;
    if !rest.is_empty() && secs >= 60.0 {
        return None;
    }
    let mut total = 0.0;
    for (i, p) in rest.iter().enumerate() {
        let v: u32 = p.trim().parse().ok()?;
        if i > 0 && v >= 60 {
            return None;
        }
        total = total * 60.0 + f64::from(v);
    }
    Some(total * 60.0 + secs)
}

pub fn format_timestamp(seconds: f64) -> String {
    let s = seconds.max(0.0).round() as u64;
    format!("{:02}:{:02}", s / 60, s % 60)
}

/// The JSON object inside a response, tolerating code fences and surrounding prose.
pub fn extract_json(text: &str) -> Checked<Value> {
    let start = text.find(['{', '[']);
    let end = text.rfind(['}', ']']);
    let (Some(start), Some(end)) = (start, end) else {
        return Err(Violation::new(Rule::MalformedJson, "no JSON object in response"));
    };
    if end < start {
        return Err(Violation::new(Rule::MalformedJson, "no JSON object in response"));
    }
    serde_json::from_str(&text[start..=end]).map_err(|e| Violation::new(Rule::MalformedJson, e.to_string()))
}

fn field<'a>(v: &'a Value, key: &str) -> Checked<&'a Value> {
    v.get(key)
        .filter(|x| !x.is_null())
        .ok_or_else(|| Violation::new(Rule::MissingField, format!("`{key}` is missing")))
}

fn string<'a>(v: &'a Value, key: &str) -> Checked<&'a str> {
    field(v, key)?
        .as_str()
        .ok_or_else(|| Violation::new(Rule::MissingField, format!("`{key}` must be a string")))
}

fn array<'a>(v: &'a Value, key: &str) -> Checked<&'a Vec<Value>> {
    field(v, key)?
        .as_array()
        .ok_or_else(|| Violation::new(Rule::MissingField, format!("`{key}` must be an array")))
}

fn strings(v: &Value, key: &str) -> Checked<Vec<String>> {
    array(v, key)?
        .iter()
        .map(|x| {
            x.as_str()
                .map(str::to_string)
                .ok_or_else(|| Violation::new(Rule::MissingField, format!("`{key}` must hold strings")))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneDraft {
    pub scene_id: u32,
    pub start: f64,
    pub end: f64,
    pub description: String,
    pub vibe: String,
    pub keyword_pools: KeywordPools,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverallKeywords {
    pub dominant_genres: Vec<String>,
    pub primary_moods: Vec<String>,
    pub recommended_instruments: Vec<String>,
    pub energy_profile: String,
    pub tempo_range: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoAnalysis {
    pub total_duration: f64,
    pub scenes: Vec<SceneDraft>,
    pub overall: OverallKeywords,
}

fn pools(v: &Value, scene: u32) -> Checked<KeywordPools> {
    let raw = [
        strings(v, "genres")?,
        strings(v, "instruments")?,
        strings(v, "moods")?,
        strings(v, "energy")?,
    ];
    let [g, i, m, e] = raw.clone();
    let pools = KeywordPools::new(g, i, m, e);
    for (name, (before, after)) in ["genres", "instruments", "moods", "energy"].iter().zip(raw.iter().zip([
        &pools.genres,
        &pools.instruments,
        &pools.moods,
        &pools.energy,
    ])) {
        if after.len() != before.len() {
            return Err(Violation::new(
                Rule::KeywordPool,
                format!("scene {scene}: duplicate or blank {name} keywords"),
            ));
        }
        if after.len() < MIN_POOL_KEYWORDS {
            return Err(Violation::new(
                Rule::KeywordPool,
                format!("scene {scene}: {} {name} keywords, need at least {MIN_POOL_KEYWORDS}", after.len()),
            ));
        }
    }
    Ok(pools)
}

/// Parses and checks a video analysis for a video of `video_duration` seconds.
pub fn parse_video_analysis(text: &str, video_duration: f64) -> Checked<VideoAnalysis> {
    let root = extract_json(text)?;
    let va = field(&root, "videoAnalysis")?;
    let scenes_raw = array(va, "scenes")?;
    if !(MIN_SCENES..=MAX_SCENES).contains(&scenes_raw.len()) {
        return Err(Violation::new(
            Rule::SceneCount,
            format!("{} scenes, expected {MIN_SCENES}-{MAX_SCENES}", scenes_raw.len()),
        ));
    }
    let mut scenes = Vec::with_capacity(scenes_raw.len());
    for (i, s) in scenes_raw.iter().enumerate() {
        let ts = |key: &str| -> Checked<f64> {
            let raw = string(s, key)?;
            parse_timestamp(raw).ok_or_else(|| {
                Violation::new(Rule::SceneTimestamp, format!("scene {}: bad {key} {raw:?}", i + 1))
            })
        };
        let (start, end) = (ts("startTime")?, ts("endTime")?);
        if end <= start {
            return Err(Violation::new(
                Rule::SceneTimestamp,
                format!("scene {} ends at {end} s, before it starts at {start} s", i + 1),
            ));
        }
        let scene_id = field(s, "sceneId")?
            .as_u64()
            .map(|v| v as u32)
            .unwrap_or(i as u32 + 1);
        scenes.push(SceneDraft {
            scene_id,
            start,
            end,
            description: string(s, "sceneDescription")?.trim().to_string(),
            vibe: string(s, "vibeDescription")?.trim().to_string(),
            keyword_pools: KeywordPools::default(),
        });
    }
    for w in scenes.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if b.start < a.end - TILING_SLACK_S {
            return Err(Violation::new(
                Rule::SceneOverlap,
                format!("scene {} starts at {} s, before scene {} ends at {} s", b.scene_id, b.start, a.scene_id, a.end),
            ));
        }
        if b.start > a.end + TILING_SLACK_S {
            return Err(Violation::new(
                Rule::SceneGap,
                format!("gap between scene {} ({} s) and scene {} ({} s)", a.scene_id, a.end, b.scene_id, b.start),
            ));
        }
    }
    let (first, last) = (&scenes[0], &scenes[scenes.len() - 1]);
    if first.start > TILING_SLACK_S || (last.end - video_duration).abs() > SCENE_SLACK_S {
        return Err(Violation::new(
            Rule::SceneCoverage,
            format!(
                "scenes span {}-{} s, video is 0-{video_duration} s",
                first.start, last.end
            ),
        ));
    }
    for s in &scenes {
        let d = s.end - s.start;
        if d < MIN_SCENE_S - SCENE_SLACK_S || d > MAX_SCENE_S + SCENE_SLACK_S {
            return Err(Violation::new(
                Rule::SceneDuration,
                format!("scene {} lasts {d} s, expected {MIN_SCENE_S}-{MAX_SCENE_S} s", s.scene_id),
            ));
        }
    }
    for (i, s) in scenes_raw.iter().enumerate() {
        if scenes[i].description.is_empty() || scenes[i].vibe.is_empty() {
            return Err(Violation::new(Rule::MissingField, format!("scene {} lacks a description", i + 1)));
        }
        scenes[i].keyword_pools = pools(field(s, "musicKeywords")?, scenes[i].scene_id)?;
    }
    let ok = field(va, "overallKeywords")?;
    let overall = OverallKeywords {
        dominant_genres: strings(ok, "dominantGenres")?,
        primary_moods: strings(ok, "primaryMoods")?,
        recommended_instruments: strings(ok, "recommendedInstruments")?,
        energy_profile: string(ok, "energyProfile")?.to_string(),
        tempo_range: string(ok, "tempoRange")?.to_string(),
    };
    for (name, list) in [
        ("dominantGenres", &overall.dominant_genres),
        ("primaryMoods", &overall.primary_moods),
        ("recommendedInstruments", &overall.recommended_instruments),
    ] {
        if list.len() != OVERALL_KEYWORDS {
            return Err(Violation::new(
                Rule::OverallKeywords,
                format!("{name} has {} entries, expected {OVERALL_KEYWORDS}", list.len()),
            ));
        }
    }
    let total_duration = string(va, "totalDuration")
        .ok()
        .and_then(parse_timestamp)
        .unwrap_or(video_duration);
    Ok(VideoAnalysis { total_duration, scenes, overall })
}

impl VideoAnalysis {
    /// The response this analysis would have been parsed from.
    pub fn to_response(&self) -> Value {
        let scenes: Vec<Value> = self
            .scenes
            .iter()
            .map(|s| {
                json!({
                    "sceneId": s.scene_id,
                    "startTime": format_timestamp(s.start),
                    "endTime": format_timestamp(s.end),
                    "duration": format_timestamp(s.end - s.start),
                    "sceneDescription": s.description,
                    "vibeDescription": s.vibe,
                    "musicKeywords": {
                        "genres": s.keyword_pools.genres,
                        "instruments": s.keyword_pools.instruments,
                        "moods": s.keyword_pools.moods,
                        "energy": s.keyword_pools.energy,
                    }
                })
            })
            .collect();
        json!({
            "videoAnalysis": {
                "totalDuration": format_timestamp(self.total_duration),
                "scenes": scenes,
                "overallKeywords": {
                    "dominantGenres": self.overall.dominant_genres,
                    "primaryMoods": self.overall.primary_moods,
                    "recommendedInstruments": self.overall.recommended_instruments,
                    "energyProfile": self.overall.energy_profile,
                    "tempoRange": self.overall.tempo_range,
                }
            }
        })
    }
}

fn tag_category(s: &str) -> Option<TagCategory> {
    TagCategory::ALL.into_iter().find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
}

pub fn parse_music_analysis(text: &str) -> Checked<MusicAnalysis> {
    let root = extract_json(text)?;
    let fit = field(&root, "fitAnalysis")?;
    let verdict = match string(fit, "verdict")?.trim().to_ascii_lowercase().as_str() {
        "good" => FitVerdict::Good,
        "bad" => FitVerdict::Bad,
        other => return Err(Violation::new(Rule::FitVerdict, format!("verdict {other:?} is not good or bad"))),
    };
    let reasons = strings(fit, "reasons")?;
    let (lo, hi) = match verdict {
        FitVerdict::Good => (2, 3),
        FitVerdict::Bad => (1, 2),
    };
    if !(lo..=hi).contains(&reasons.len()) {
        return Err(Violation::new(
            Rule::FitReasonCount,
            format!("{} reasons for a {verdict:?} verdict, expected {lo}-{hi}", reasons.len()),
        ));
    }
    for r in &reasons {
        let n = word_count(r);
        if !(FIT_REASON_WORDS.0..=FIT_REASON_WORDS.1).contains(&n) {
            return Err(Violation::new(
                Rule::FitReasonWords,
                format!("reason {r:?} has {n} words, expected {}-{}", FIT_REASON_WORDS.0, FIT_REASON_WORDS.1),
            ));
        }
    }

    let tags_raw = array(&root, "prominentTags")?;
    if tags_raw.len() != 3 {
        return Err(Violation::new(Rule::TagCount, format!("{} tags, expected 3", tags_raw.len())));
    }
    let mut tags = Vec::with_capacity(3);
    for t in tags_raw {
        let label = string(t, "label")?.trim().to_string();
        if label.is_empty() {
            return Err(Violation::new(Rule::TagLabel, "empty tag label"));
        }
        let raw_cat = string(t, "category")?;
        let category = tag_category(raw_cat)
            .ok_or_else(|| Violation::new(Rule::TagCategories, format!("unknown tag category {raw_cat:?}")))?;
        tags.push(PromTag { label, category, color: string(t, "color")?.trim().to_string() });
    }
    for c in TagCategory::ALL {
        if tags.iter().filter(|t| t.category == c).count() != 1 {
            return Err(Violation::new(
                Rule::TagCategories,
                format!("expected exactly one {} tag", c.as_str()),
            ));
        }
    }
    for t in &tags {
        if !t.color.eq_ignore_ascii_case(t.category.color()) {
            return Err(Violation::new(
                Rule::TagColor,
                format!("{} tag {:?} has color {}, expected {}", t.category.as_str(), t.label, t.color, t.category.color()),
            ));
        }
    }

    let image_description = string(&root, "imageDescription")?.trim().to_string();
    let n = sentence_count(&image_description);
    if !(4..=5).contains(&n) {
        return Err(Violation::new(
            Rule::ImageDescriptionSentences,
            format!("image description has {n} sentences, expected 4-5"),
        ));
    }
    let detailed_description = string(&root, "detailedMusicDescription")?.trim().to_string();
    let lower = detailed_description.to_lowercase();
    if !(lower.contains("tempo") || lower.contains("bpm")) {
        return Err(Violation::new(Rule::DetailedDescription, "detailed description does not state the tempo"));
    }
    Ok(MusicAnalysis {
        fit: FitCheck { verdict, reasons },
        tags,
        image_description,
        detailed_description,
    })
}

pub fn music_analysis_response(a: &MusicAnalysis) -> Value {
    json!({
        "fitAnalysis": {
            "verdict": match a.fit.verdict { FitVerdict::Good => "good", FitVerdict::Bad => "bad" },
            "reasons": a.fit.reasons,
        },
        "prominentTags": a.tags.iter().map(|t| json!({
            "label": t.label, "category": t.category.as_str(), "color": t.color
        })).collect::<Vec<_>>(),
        "imageDescription": a.image_description,
        "detailedMusicDescription": a.detailed_description,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditVariation {
    pub description: String,
    pub title: String,
    pub emphasis: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditPlan {
    pub request: String,
    pub variations: Vec<EditVariation>,
}

pub fn parse_edit_plan(text: &str, request: &str) -> Checked<EditPlan> {
    let root = extract_json(text)?;
    let raw = array(&root, "variations")?;
    if raw.len() != PLAN_VARIATIONS {
        return Err(Violation::new(
            Rule::EditVariationCount,
            format!("{} variations, expected {PLAN_VARIATIONS}", raw.len()),
        ));
    }
    let mut variations = Vec::with_capacity(PLAN_VARIATIONS);
    for v in raw {
        let title = string(v, "title")?.trim().to_string();
        let n = word_count(&title);
        if !(EDIT_TITLE_WORDS.0..=EDIT_TITLE_WORDS.1).contains(&n) {
            return Err(Violation::new(
                Rule::EditTitleWords,
                format!("title {title:?} has {n} words, expected {}-{}", EDIT_TITLE_WORDS.0, EDIT_TITLE_WORDS.1),
            ));
        }
        let description = string(v, "description")?.trim().to_string();
        if description.is_empty() {
            return Err(Violation::new(Rule::EditDescription, format!("variation {title:?} has no description")));
        }
        let emphasis = v.get("emphasis").and_then(Value::as_str).unwrap_or("").trim().to_string();
        variations.push(EditVariation { description, title, emphasis });
    }
    Ok(EditPlan { request: request.to_string(), variations })
}

impl EditPlan {
    pub fn to_response(&self) -> Value {
        json!({ "variations": self.variations.iter().map(|v| json!({
            "description": v.description, "title": v.title, "emphasis": v.emphasis
        })).collect::<Vec<_>>() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlendVariation {
    pub title: String,
    pub emphasis: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlendPlan {
    pub common_description: String,
    pub variations: Vec<BlendVariation>,
}

pub fn parse_blend_plan(text: &str) -> Checked<BlendPlan> {
    let root = extract_json(text)?;
    let common_description = string(&root, "commonDescription")?.trim().to_string();
    if common_description.is_empty() {
        return Err(Violation::new(Rule::BlendCommonDescription, "empty commonDescription"));
    }
    let raw = array(&root, "variations")?;
    if raw.len() != PLAN_VARIATIONS {
        return Err(Violation::new(
            Rule::BlendVariationCount,
            format!("{} variations, expected {PLAN_VARIATIONS}", raw.len()),
        ));
    }
    let mut variations = Vec::with_capacity(PLAN_VARIATIONS);
    for v in raw {
        let title = string(v, "title")?.trim().to_string();
        let emphasis = string(v, "emphasis")?.trim().to_string();
        if title.is_empty() || emphasis.is_empty() {
            return Err(Violation::new(Rule::BlendVariationText, "variation needs a title and an emphasis"));
        }
        variations.push(BlendVariation { title, emphasis });
    }
    Ok(BlendPlan { common_description, variations })
}

impl BlendPlan {
    pub fn to_response(&self) -> Value {
        json!({
            "commonDescription": self.common_description,
            "variations": self.variations.iter().map(|v| json!({ "title": v.title, "emphasis": v.emphasis })).collect::<Vec<_>>()
        })
    }
}

/// Modifier suggestions: `{"modifiers": [...]}` or a bare array.
pub fn parse_modifiers(text: &str) -> Checked<Vec<String>> {
    let root = extract_json(text)?;
    let list = match &root {
        Value::Array(_) => root.clone(),
        Value::Object(_) => field(&root, "modifiers")?.clone(),
        _ => return Err(Violation::new(Rule::ModifierList, "expected a list of modifiers")),
    };
    let arr = list
        .as_array()
        .ok_or_else(|| Violation::new(Rule::ModifierList, "`modifiers` must be an array"))?;
    Ok(arr.iter().filter_map(|v| v.as_str().map(str::to_string)).collect())
}

/// Keyword pools for one scene: `{"musicKeywords": {...}}`.
pub fn parse_keyword_pools(text: &str) -> Checked<KeywordPools> {
    let root = extract_json(text)?;
    let inner = root.get("musicKeywords").unwrap_or(&root);
    pools(inner, 0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorDraft {
    pub kind: String,
    pub description: String,
    pub scene_id: Option<u32>,
}

pub fn parse_anchors(text: &str) -> Checked<Vec<AnchorDraft>> {
    let root = extract_json(text)?;
    let raw = array(&root, "anchors")?;
    if raw.is_empty() {
        return Err(Violation::new(Rule::AnchorList, "no anchors"));
    }
    raw.iter()
        .map(|a| {
            Ok(AnchorDraft {
                kind: string(a, "kind")?.trim().to_string(),
                description: string(a, "description")?.trim().to_string(),
                scene_id: a.get("sceneId").and_then(Value::as_u64).map(|v| v as u32),
            })
        })
        .collect()
}

pub fn parse_image_prompt(text: &str) -> Checked<String> {
    let root = extract_json(text)?;
    let p = string(&root, "imagePrompt")?.trim().to_string();
    if p.is_empty() {
        return Err(Violation::new(Rule::MissingField, "empty imagePrompt"));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamps() {
        assert_eq!(parse_timestamp("01:30"), Some(90.0));
        assert_eq!(parse_timestamp("00:00"), Some(0.0));
        assert_eq!(parse_timestamp("1:02:03"), Some(3723.0));
        assert_eq!(parse_timestamp("00:07.5"), Some(7.5));
        assert_eq!(parse_timestamp("42"), Some(42.0));
        assert_eq!(parse_timestamp("01:75"), None);
        assert_eq!(parse_timestamp("a:10"), None);
        assert_eq!(parse_timestamp(""), None);
        assert_eq!(format_timestamp(90.0), "01:30");
    }

    #[test]
    fn counting() {
        assert_eq!(word_count("Acoustic guitar fits family content mood"), 6);
        assert_eq!(word_count("upbeat lo-fi  groove"), 3);
        assert_eq!(sentence_count("One. Two! Three? Four"), 4);
        assert_eq!(sentence_count("Tempo 1.5 times faster. Done."), 2);
        assert_eq!(sentence_count(""), 0);
    }

    #[test]
    fn json_extraction() {
        let v = extract_json("```json\n{\"a\": 1}\n```").unwrap();
        assert_eq!(v["a"], 1);
        assert_eq!(extract_json("nothing here").unwrap_err().rule, Rule::MalformedJson);
        assert_eq!(extract_json("{broken").unwrap_err().rule, Rule::MalformedJson);
    }
}
