use async_trait::async_trait;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use soundstage_core::lexicon;
use soundstage_core::model::{KeywordCategory, TagCategory};
use soundstage_core::templates::{TemplateId, TemplateValue, Variables};

use super::music::Fingerprint;
use crate::capabilities::ProviderCapabilities;
use crate::error::{ProviderError, Result};
use crate::features::{hash64, tokens};
use crate::request::{LlmRequest, MediaKind};
use crate::LlmProvider;

/// Deterministic language model: each template gets a schema-valid JSON answer
/// derived from the variables, any attached mock audio, and the seed.
#[derive(Clone, Debug)]
pub struct MockLlm {
    seed: u64,
}

const SCENE_DESCRIPTIONS: [&str; 6] = [
    "Opening shot that introduces the main subject and setting",
    "The action picks up as the story develops",
    "A quieter, reflective moment with slower movement",
    "A lively montage of highlights and movement",
    "The story reaches its emotional peak",
    "Closing shot that winds down and resolves the story",
];

const SCENE_VIBES: [&str; 6] = [
    "Curious and welcoming, with a sense of anticipation",
    "Playful and energetic momentum",
    "Calm, warm and introspective",
    "Joyful and upbeat celebration",
    "Dramatic and hopeful build",
    "Peaceful resolution with a nostalgic glow",
];

const HIGH_ENERGY: &[&str] = &[
    "energetic", "fast", "driving", "upbeat", "high", "dance", "techno", "rock", "intense",
    "lively", "exciting", "celebration",
];
const LOW_ENERGY: &[&str] = &[
    "calm", "slow", "relaxed", "mellow", "meditative", "ambient", "serene", "gentle", "soft",
    "chill", "peaceful", "quiet", "low", "calmer", "introspective",
];
const POSITIVE_MOODS: &[&str] = &[
    "uplifting", "cheerful", "hopeful", "playful", "joyful", "warm", "optimistic", "romantic",
];
const NEGATIVE_MOODS: &[&str] = &["melancholic", "tense", "mysterious", "dramatic"];

const BLEND_VARIATIONS: [(&str, &str); 8] = [
    ("Added Piano", "bring out warm e-piano voicings"),
    ("Softer Drums", "brush/loose kit, reduced transients"),
    ("Deeper Bass", "rounder low end, sustained notes"),
    ("Airy Reverb", "slightly longer tails, wider space"),
    ("Brighter Synths", "lift synth presence in the mix"),
    ("Slower Tempo", "ease the groove down slightly"),
    ("Warmer Tone", "gentle low-mid warmth"),
    ("Lighter Percussion", "thinner, sparser hits"),
];

const INSTRUMENT_ADJECTIVES: &[&str] = &["soft", "warm", "bright", "gentle", "muted", "plucked", "lush"];

pub(crate) fn title_case(s: &str) -> String {
    s.split(' ')
        .map(|w| {
            let mut c = w.chars();
            match c.next() {
                Some(f) => f.to_uppercase().chain(c).collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn mmss(seconds: f64) -> String {
    let s = seconds.round() as u64;
    format!("{:02}:{:02}", s / 60, s % 60)
}

/// Lexicon terms present as whole words in `text`, by first appearance.
pub(crate) fn find_terms<'a>(text: &str, list: &[&'a str]) -> Vec<&'a str> {
    let hay = format!(" {} ", tokens(text).join(" "));
    let mut hits: Vec<(usize, &str)> = list
        .iter()
        .filter_map(|t| {
            let needle = format!(" {} ", tokens(t).join(" "));
            hay.find(&needle).map(|pos| (pos, *t))
        })
        .collect();
    hits.sort();
    hits.into_iter().map(|(_, t)| t).collect()
}

fn article(word: &str) -> &'static str {
    if word.starts_with(['a', 'e', 'i', 'o', 'u']) {
        "an"
    } else {
        "a"
    }
}

fn any_word(text: &str, words: &[&str]) -> bool {
    tokens(text).iter().any(|t| words.contains(&t.as_str()))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Level {
    Low,
    Medium,
    High,
}

fn energy_of(text: &str) -> Option<Level> {
    let (hi, lo) = (any_word(text, HIGH_ENERGY), any_word(text, LOW_ENERGY));
    match (hi, lo) {
        (true, false) => Some(Level::High),
        (false, true) => Some(Level::Low),
        _ => None,
    }
}

fn text_var<'a>(vars: &'a Variables, key: &str) -> Result<&'a str> {
    match vars.get(key) {
        Some(TemplateValue::Text(s)) => Ok(s),
        _ => Err(ProviderError::InvalidRequest(format!("missing variable {key}"))),
    }
}

fn list_var<'a>(vars: &'a Variables, key: &str) -> Result<&'a [String]> {
    match vars.get(key) {
        Some(TemplateValue::List(v)) => Ok(v),
        _ => Err(ProviderError::InvalidRequest(format!("missing list {key}"))),
    }
}

fn sample<'a>(rng: &mut ChaCha8Rng, list: &[&'a str], n: usize) -> Vec<&'a str> {
    let mut v = list.to_vec();
    v.shuffle(rng);
    v.truncate(n);
    v
}

impl MockLlm {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn rng(&self, request: &LlmRequest) -> ChaCha8Rng {
        let vars = serde_json::to_vec(&request.variables).unwrap_or_default();
        ChaCha8Rng::seed_from_u64(hash64(&[
            b"llm",
            &self.seed.to_le_bytes(),
            request.template_id.as_str().as_bytes(),
            &vars,
        ]))
    }

    pub fn respond(&self, request: &LlmRequest) -> Result<Value> {
        let mut rng = self.rng(request);
        let vars = &request.variables;
        match request.template_id {
            TemplateId::VideoAnalysis => video_analysis(vars, &mut rng),
            TemplateId::MusicAnalysis => music_analysis(request, &mut rng),
            TemplateId::EditExpansion => edit_expansion(vars),
            TemplateId::BlendExpansion => blend_expansion(vars, &mut rng),
            TemplateId::PromptModifiers => prompt_modifiers(vars, &mut rng),
            TemplateId::VisualAnchors => visual_anchors(vars),
            TemplateId::SceneKeywords => scene_keywords(vars, &mut rng),
            TemplateId::BaselineThumbnail => baseline_thumbnail(request),
        }
    }
}

fn keyword_pools(rng: &mut ChaCha8Rng, preferred: &str) -> Value {
    let mut out = serde_json::Map::new();
    for c in KeywordCategory::ALL {
        let list = lexicon::category(c);
        let mut picked: Vec<&str> = find_terms(preferred, list);
        for t in sample(rng, list, list.len()) {
            if picked.len() >= 10 {
                break;
            }
            if !picked.contains(&t) {
                picked.push(t);
            }
        }
        picked.truncate(10);
        let key = match c {
            KeywordCategory::Genres => "genres",
            KeywordCategory::Instruments => "instruments",
            KeywordCategory::Moods => "moods",
            KeywordCategory::Energy => "energy",
        };
        out.insert(key.into(), json!(picked));
    }
    Value::Object(out)
}

fn video_analysis(vars: &Variables, rng: &mut ChaCha8Rng) -> Result<Value> {
    let duration: f64 = text_var(vars, "videoDuration")?
        .trim()
        .parse()
        .map_err(|_| ProviderError::InvalidRequest("videoDuration is not a number".into()))?;
    let k = ((duration / 30.0).round() as usize).clamp(2, 6);
    let bounds: Vec<f64> = (0..=k).map(|i| (duration * i as f64 / k as f64).round()).collect();
    let scenes: Vec<Value> = (0..k)
        .map(|i| {
            let pick = if k == 1 { 0 } else { i * 5 / (k - 1) };
            json!({
                "sceneId": i + 1,
                "startTime": mmss(bounds[i]),
                "endTime": mmss(bounds[i + 1]),
                "duration": mmss(bounds[i + 1] - bounds[i]),
                "sceneDescription": SCENE_DESCRIPTIONS[pick],
                "vibeDescription": SCENE_VIBES[pick],
                "musicKeywords": keyword_pools(rng, SCENE_VIBES[pick]),
            })
        })
        .collect();
    Ok(json!({
        "videoAnalysis": {
            "totalDuration": mmss(duration),
            "scenes": scenes,
            "overallKeywords": {
                "dominantGenres": sample(rng, lexicon::GENRES, 4),
                "primaryMoods": sample(rng, lexicon::MOODS, 4),
                "recommendedInstruments": sample(rng, lexicon::INSTRUMENTS, 4),
                "energyProfile": "Gentle opening that builds to a lively middle and settles at the end",
                "tempoRange": "80-120 BPM"
            }
        }
    }))
}

fn music_analysis(request: &LlmRequest, rng: &mut ChaCha8Rng) -> Result<Value> {
    let vars = &request.variables;
    let prompt = text_var(vars, "originalPrompt")?;
    let scene_text = format!("{} {}", text_var(vars, "sceneVibe")?, text_var(vars, "sceneDescription")?);
    let heard = request
        .attachments
        .iter()
        .filter(|a| a.kind == MediaKind::Audio)
        .find_map(|a| Fingerprint::read(&a.data))
        .map(|fp| fp.tokens.join(" "))
        .unwrap_or_else(|| prompt.to_string());

    let genre = find_terms(&heard, lexicon::GENRES).first().copied().unwrap_or("cinematic");
    let mut instruments = find_terms(&heard, lexicon::INSTRUMENTS);
    if instruments.is_empty() {
        instruments.push(*["piano", "guitar", "strings", "synthesizer"].choose(rng).expect("non-empty"));
    }
    let mood = find_terms(&heard, lexicon::MOODS)
        .first()
        .copied()
        .or_else(|| find_terms(&scene_text, lexicon::MOODS).first().copied())
        .unwrap_or("warm");
    let energy = energy_of(&heard).unwrap_or(Level::Medium);
    let bpm = match energy {
        Level::High => 128 + rng.random_range(0..12),
        Level::Low => 68 + rng.random_range(0..10),
        Level::Medium => 96 + rng.random_range(0..14),
    };
    let (energy_word, tempo_word) = match energy {
        Level::High => ("high", "fast"),
        Level::Low => ("low", "slow"),
        Level::Medium => ("medium", "moderate"),
    };
    let valence = if POSITIVE_MOODS.contains(&mood) {
        "positive"
    } else if NEGATIVE_MOODS.contains(&mood) {
        "negative"
    } else {
        "neutral"
    };

    let scene_energy = energy_of(&scene_text);
    let clash = matches!(
        (scene_energy, energy),
        (Some(Level::Low), Level::High) | (Some(Level::High), Level::Low)
    );
    let good = !clash && rng.random_range(0..5) != 0;
    let genre_t = title_case(genre);
    let instr_t = title_case(instruments[0]);
    let reasons: Vec<String> = if good {
        let mut r = vec![
            format!("{genre_t} genre matches video themes"),
            format!("{instr_t} adds warmth to scene"),
            format!("{} tempo aligns with scene energy", title_case(tempo_word)),
        ];
        r.truncate(rng.random_range(2..=3));
        r
    } else {
        let mut r = vec![format!("{genre_t} genre mismatches video mood")];
        if clash {
            r.insert(0, match energy {
                Level::Low => "Energy too low for this scene".to_string(),
                _ => "Energy level too high for scene".to_string(),
            });
        } else {
            r.push(format!("{instr_t} feels out of place here"));
        }
        r.truncate(rng.random_range(1..=2));
        r
    };

    let instrument_list = instruments.join(", ");
    let mut sentences = vec![
        format!("The protagonist character stands at the center of {} {genre} scene.", article(genre)),
        format!("The protagonist character plays the {} with {} gestures.", instruments[0], if energy == Level::High { "quick, lively" } else { "slow, graceful" }),
        format!("Around them, the {instrument_list} glow and pulse in rhythm."),
        format!("The colors feel {mood}, matching the {energy_word} energy of the music."),
    ];
    if rng.random_bool(0.5) {
        sentences.push(format!("Everything sways to a steady {bpm} BPM pulse."));
    }
    let key = *["C major", "D minor", "F major", "A minor", "G major", "E minor"].choose(rng).expect("non-empty");
    let support = instruments.get(1).map(|i| format!(", {i} in support")).unwrap_or_default();
    let detailed = format!(
        "Tempo: {bpm} BPM, {tempo_word} pace. Time signature: 4/4. Key: {key}. \
         Instrumentation: {} lead{support}. Form: intro, main theme, variation, outro. \
         Genre: {genre}. Articulation: {}. Production: clean mix with {} stereo image. \
         Emotional character: {mood}, {valence} valence, {energy_word} energy. \
         Distinctive elements: a recurring {} motif.",
        instruments[0],
        if energy == Level::High { "staccato and punchy" } else { "legato and smooth" },
        if energy == Level::Low { "an intimate" } else { "a wide" },
        instruments[0],
    );
    let tags = [
        (title_case(genre), TagCategory::Genre),
        (title_case(mood), TagCategory::Mood),
        (title_case(instruments[0]), TagCategory::Instrument),
    ];
    Ok(json!({
        "fitAnalysis": { "verdict": if good { "good" } else { "bad" }, "reasons": reasons },
        "prominentTags": tags.iter().map(|(label, c)| json!({
            "label": label, "category": c.as_str(), "color": c.color()
        })).collect::<Vec<_>>(),
        "imageDescription": sentences.join(" "),
        "detailedMusicDescription": detailed,
    }))
}

fn edit_titles(request: &str) -> Vec<(String, String)> {
    let toks = tokens(request);
    let has = |w: &[&str]| toks.iter().any(|t| w.contains(&t.as_str()));
    let object = |after: &[&str]| {
        toks.iter()
            .skip_while(|t| !after.contains(&t.as_str()))
            .nth(1)
            .or_else(|| toks.last())
            .map(|w| title_case(w))
            .unwrap_or_else(|| "Sound".into())
    };
    let pairs: Vec<(String, &str)> = if has(&["remove", "without", "no", "drop"]) {
        let x = object(&["remove", "without", "no", "drop"]);
        vec![
            (format!("No {x}"), "removed it entirely"),
            (format!("Removed {x}"), "took it out of the arrangement"),
            (format!("Less {x}"), "pulled it far back in the mix"),
            (format!("Quieter {x}"), "lowered its level"),
        ]
    } else if has(&["add", "more", "include", "with"]) && !has(&["energy", "energetic", "calm", "calmer"]) {
        let x = object(&["add", "more", "include", "with"]);
        vec![
            (format!("Added {x}"), "added it as a new layer"),
            (format!("More {x}"), "gave it more presence"),
            (format!("{x} Lead"), "made it carry the melody"),
            (format!("Subtle {x}"), "added it quietly underneath"),
        ]
    } else if has(&["calm", "calmer", "relax", "relaxed", "soft", "softer", "gentle", "chill", "quieter"]) {
        vec![
            ("Calmed Down".into(), "overall calmer feel"),
            ("Reduced Energy".into(), "lower energy throughout"),
            ("Slower Pace".into(), "slower tempo"),
            ("Softened Tone".into(), "softer dynamics"),
        ]
    } else if has(&["energy", "energetic", "faster", "upbeat", "intense", "exciting"]) {
        vec![
            ("More Energy".into(), "higher energy throughout"),
            ("Faster Tempo".into(), "faster tempo"),
            ("Added Percussion".into(), "added driving percussion"),
            ("Louder Drums".into(), "pushed the drums forward"),
        ]
    } else if has(&["slow", "slower"]) {
        vec![
            ("Slower Tempo".into(), "slower tempo"),
            ("Relaxed Pace".into(), "more relaxed pacing"),
            ("Calmer Groove".into(), "calmer groove"),
            ("Softer Drums".into(), "softer drums"),
        ]
    } else if has(&["louder", "loud", "bigger"]) {
        vec![
            ("Louder Volume".into(), "louder overall level"),
            ("Bigger Mix".into(), "fuller, bigger mix"),
            ("Stronger Drums".into(), "stronger drums"),
            ("Fuller Sound".into(), "fuller arrangement"),
        ]
    } else {
        vec![
            ("Edited Mix".into(), "applied the requested change"),
            ("Subtle Change".into(), "applied the change lightly"),
            ("Stronger Change".into(), "applied the change strongly"),
            ("Alternate Take".into(), "applied the change with a new arrangement"),
        ]
    };
    pairs.into_iter().map(|(t, e)| (t, e.to_string())).collect()
}

fn edit_expansion(vars: &Variables) -> Result<Value> {
    let request = text_var(vars, "editRequest")?;
    let original = text_var(vars, "originalMusicDescription")?;
    let variations: Vec<Value> = edit_titles(request)
        .into_iter()
        .map(|(title, emphasis)| {
            json!({
                "description": format!("{original} Edit ({request}): {emphasis}."),
                "title": title,
                "emphasis": emphasis,
            })
        })
        .collect();
    Ok(json!({ "variations": variations }))
}

fn blend_expansion(vars: &Variables, rng: &mut ChaCha8Rng) -> Result<Value> {
    let descriptions = list_var(vars, "musicDescriptions")?;
    let vocab: Vec<&str> = [lexicon::GENRES, lexicon::INSTRUMENTS, lexicon::MOODS].concat();
    let shared: Vec<&str> = vocab
        .iter()
        .copied()
        .filter(|t| descriptions.iter().filter(|d| !find_terms(d, &[t]).is_empty()).count() >= 2)
        .collect();
    let common = if shared.is_empty() {
        "Balanced blend of the reference tracks with a cohesive mix and a steady groove".to_string()
    } else {
        format!("Shared blend of {} with a cohesive mix and a steady groove", shared.join(", "))
    };
    let mut pool = BLEND_VARIATIONS.to_vec();
    pool.shuffle(rng);
    let variations: Vec<Value> = pool[..4]
        .iter()
        .map(|(t, e)| json!({ "title": t, "emphasis": e }))
        .collect();
    Ok(json!({ "commonDescription": common, "variations": variations }))
}

fn prompt_modifiers(vars: &Variables, rng: &mut ChaCha8Rng) -> Result<Value> {
    let query = text_var(vars, "query")?;
    let count: usize = text_var(vars, "count")?
        .trim()
        .parse()
        .map_err(|_| ProviderError::InvalidRequest("count is not a number".into()))?;
    let query_tokens = tokens(query);
    let solo = !find_terms(query, lexicon::INSTRUMENTS).is_empty() && query_tokens.iter().any(|t| t == "solo");
    let mut genre: Vec<String> = Vec::new();
    for g in sample(rng, lexicon::GENRES, lexicon::GENRES.len()) {
        let m = *lexicon::MOODS.choose(rng).expect("non-empty");
        genre.push(format!("{m} {g}"));
    }
    let mut instrument: Vec<String> = Vec::new();
    if !solo {
        for i in sample(rng, lexicon::INSTRUMENTS, lexicon::INSTRUMENTS.len()) {
            let a = *INSTRUMENT_ADJECTIVES.choose(rng).expect("non-empty");
            instrument.push(format!("{a} {i}"));
        }
    }
    let mood: Vec<String> = sample(rng, lexicon::MOODS, lexicon::MOODS.len())
        .into_iter()
        .map(|m| format!("{m} {}", ["mood", "atmosphere", "feel"].choose(rng).expect("non-empty")))
        .collect();
    let energy: Vec<String> = sample(rng, lexicon::ENERGY, lexicon::ENERGY.len())
        .into_iter()
        .map(|e| if e.contains(' ') { e.to_string() } else { format!("{e} groove") })
        .collect();
    let lists = [genre, instrument, mood, energy];
    let mut out: Vec<String> = Vec::new();
    let mut cursor = [0usize; 4];
    let mut stalled = 0;
    while out.len() < count && stalled < 4 {
        stalled = 0;
        for (li, list) in lists.iter().enumerate() {
            if out.len() >= count {
                break;
            }
            loop {
                let Some(cand) = list.get(cursor[li]) else {
                    stalled += 1;
                    break;
                };
                cursor[li] += 1;
                let overlaps = tokens(cand).iter().any(|t| query_tokens.contains(t));
                if !overlaps && !out.iter().any(|o| o.eq_ignore_ascii_case(cand)) {
                    out.push(cand.clone());
                    break;
                }
            }
        }
    }
    Ok(json!({ "modifiers": out }))
}

pub(crate) fn anchor_for(title: &str, video_type: &str) -> (&'static str, String) {
    let text = format!("{title} {video_type}").to_lowercase();
    if text.contains("octopus") {
        (
            "character",
            "A friendly cartoon octopus with big sparkling eyes and soft purple tentacles".into(),
        )
    } else if ["travel", "paris", "trip", "vacation", "tour"].iter().any(|w| text.contains(w)) {
        ("object_theme", "A cinematic shot of the Eiffel Tower".into())
    } else if ["talking head", "interview", "vlog", "podcast", "presenter", "lecture"]
        .iter()
        .any(|w| text.contains(w))
    {
        (
            "human_avatar",
            "A stylized avatar of a presenter with short brown hair and a denim jacket".into(),
        )
    } else {
        ("object_theme", "A cinematic shot of the scene's central subject".into())
    }
}

fn visual_anchors(vars: &Variables) -> Result<Value> {
    let (kind, description) = anchor_for(text_var(vars, "title")?, text_var(vars, "videoType")?);
    Ok(json!({ "anchors": [ { "kind": kind, "description": description, "sceneId": 1 } ] }))
}

fn scene_keywords(vars: &Variables, rng: &mut ChaCha8Rng) -> Result<Value> {
    let captions = text_var(vars, "recentCaptions")?;
    Ok(json!({ "musicKeywords": keyword_pools(rng, captions) }))
}

fn baseline_thumbnail(request: &LlmRequest) -> Result<Value> {
    let prompt = text_var(&request.variables, "originalPrompt")?;
    let heard = request
        .attachments
        .iter()
        .find_map(|a| Fingerprint::read(&a.data))
        .map(|fp| fp.tokens.join(" "))
        .unwrap_or_else(|| prompt.to_string());
    let instrument = find_terms(&heard, lexicon::INSTRUMENTS).first().copied().unwrap_or("music");
    Ok(json!({
        "imagePrompt": format!("Album cover artwork for \"{prompt}\" featuring a {instrument}, digital illustration")
    }))
}

#[async_trait]
impl LlmProvider for MockLlm {
    fn capabilities(&self) -> ProviderCapabilities {
        ProviderCapabilities {
            llm_with_audio: true,
            llm_with_video: true,
            ..ProviderCapabilities::NONE
        }
    }

    async fn complete(&self, request: &LlmRequest) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.respond(request)?).expect("json value serializes"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn title_case_words() {
        assert_eq!(title_case("hip hop"), "Hip Hop");
        assert_eq!(title_case("lo-fi"), "Lo-fi");
    }

    #[test]
    fn terms_in_order_of_mention() {
        assert_eq!(find_terms("Bass and PIANO with bass", lexicon::INSTRUMENTS), vec!["bass", "piano"]);
        assert_eq!(find_terms("a lo-fi beat", lexicon::GENRES), vec!["lo-fi"]);
        assert!(find_terms("bassoon", lexicon::INSTRUMENTS).is_empty());
    }

    #[test]
    fn edit_request_classes() {
        let t = |r: &str| edit_titles(r).into_iter().map(|p| p.0).collect::<Vec<_>>();
        assert_eq!(t("make it calmer")[0], "Calmed Down");
        assert_eq!(t("add piano")[0], "Added Piano");
        assert_eq!(t("remove drums")[0], "No Drums");
        assert_eq!(t("more energy")[0], "More Energy");
        for r in ["make it calmer", "add piano", "xyz", "louder please", "slow it"] {
            for title in t(r) {
                assert!((2..=4).contains(&title.split_whitespace().count()), "{title}");
            }
        }
    }
}
