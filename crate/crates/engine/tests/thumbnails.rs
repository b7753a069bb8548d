use std::collections::HashSet;
use std::sync::Arc;

use soundstage_core::assets::AssetStore;
use soundstage_core::lexicon;
use soundstage_core::model::{AnchorKind, Project, ProjectId, VisualAnchor};
use soundstage_engine::schema::parse_music_analysis;
use soundstage_engine::thumbnailer::{
    attributes_from_analysis, extract_anchors, fuse_prompt, map_attributes, render_animated, render_static,
    Energy, Instrument, MusicAttributes, StyleRow, TempoClass, ThumbnailSpec, Valence, DEFAULT_STYLE_SUFFIX,
    SIDECAR_SUFFIX,
};
use soundstage_engine::EngineError;
use soundstage_providers::mock::{png_prompt_hash, prompt_hash, ScriptedLlm};
use soundstage_providers::{Providers, ANIMATION_SECONDS};

const WARM_TERMS: [&str; 4] = ["warm", "golden", "orange", "magenta"];
const BRIGHT_TERMS: [&str; 2] = ["bright", "saturated"];

fn anchor() -> VisualAnchor {
    VisualAnchor {
        id: "anchor-1".into(),
        kind: AnchorKind::Character,
        description: "A friendly cartoon octopus with big sparkling eyes.".into(),
        source_scene_id: Some(1),
    }
}

fn attrs(genre: &str, tempo: TempoClass, valence: Valence, energy: Energy) -> MusicAttributes {
    MusicAttributes {
        genre: genre.into(),
        instruments: vec![
            Instrument { name: "piano".into(), prominence: 1.0 },
            Instrument { name: "strings".into(), prominence: 0.5 },
        ],
        tempo_class: tempo,
        emotion: "joyful".into(),
        valence,
        energy,
    }
}

fn grid() -> Vec<MusicAttributes> {
    let mut out = Vec::new();
    for g in lexicon::GENRES {
        for t in TempoClass::ALL {
            for v in Valence::ALL {
                for e in Energy::ALL {
                    out.push(attrs(g, t, v, e));
                }
            }
        }
    }
    out
}

#[test]
fn mapping_is_total_over_the_grid() {
    let rows = [
        StyleRow::Genre,
        StyleRow::Instruments,
        StyleRow::Tempo,
        StyleRow::Emotion,
        StyleRow::Valence,
        StyleRow::Energy,
    ];
    let cells = grid();
    assert_eq!(cells.len(), lexicon::GENRES.len() * 27);
    for a in &cells {
        let clauses = map_attributes(a);
        assert_eq!(clauses.iter().map(|(r, _)| *r).collect::<Vec<_>>(), rows, "{a:?}");
        for (row, text) in &clauses {
            assert!(!text.trim().is_empty(), "{row} empty for {a:?}");
        }
        let valence = &clauses[4].1;
        if a.valence == Valence::Positive {
            assert!(WARM_TERMS.iter().any(|w| valence.contains(w)), "{valence}");
        }
        let energy = &clauses[5].1;
        if a.energy == Energy::High {
            assert!(BRIGHT_TERMS.iter().all(|w| energy.contains(w)), "{energy}");
        }
    }
}

#[test]
fn fused_prompts_are_injective_for_a_fixed_anchor() {
    let mut seen = HashSet::new();
    for a in grid() {
        let spec = ThumbnailSpec::build(anchor(), a, DEFAULT_STYLE_SUFFIX).unwrap();
        assert!(seen.insert(spec.fused_prompt));
    }
}

#[test]
fn fused_prompt_is_anchor_clauses_suffix() {
    let a = attrs("jazz", TempoClass::Slow, Valence::Negative, Energy::Low);
    let spec = ThumbnailSpec::build(anchor(), a, DEFAULT_STYLE_SUFFIX).unwrap();
    let expected = format!(
        "{} {} {}",
        anchor().description,
        spec.style_clauses.join(" "),
        DEFAULT_STYLE_SUFFIX
    );
    assert_eq!(spec.fused_prompt, expected);
    assert_eq!(fuse_prompt(&anchor(), &spec.style_clauses, DEFAULT_STYLE_SUFFIX), expected);
    assert!(spec.fused_prompt.ends_with("vibrant and expressive."));
}

#[test]
fn emotion_row_needs_an_emotion() {
    let mut a = attrs("jazz", TempoClass::Fast, Valence::Positive, Energy::High);
    a.emotion.clear();
    let rows: Vec<StyleRow> = map_attributes(&a).into_iter().map(|(r, _)| r).collect();
    assert_eq!(rows.len(), 5);
    assert!(!rows.contains(&StyleRow::Emotion));
}

#[test]
fn unknown_genre_gets_a_generic_setting() {
    let a = attrs("polka-core", TempoClass::Medium, Valence::Neutral, Energy::Medium);
    let clauses = map_attributes(&a);
    assert_eq!(clauses.len(), 6);
    assert!(clauses[0].1.contains("cinematic"));
}

#[test]
fn instruments_are_sized_by_prominence() {
    let a = attrs("rock", TempoClass::Fast, Valence::Positive, Energy::High);
    let text = &map_attributes(&a)[1].1;
    let big = text.find("towering large piano").unwrap();
    let small = text.find("medium-sized strings").unwrap();
    assert!(big < small);
}

#[test]
fn preconditions_on_attributes() {
    let mut a = attrs("rock", TempoClass::Fast, Valence::Positive, Energy::High);
    a.instruments.reverse();
    assert!(matches!(ThumbnailSpec::build(anchor(), a, ""), Err(EngineError::Precondition(_))));
    let mut a = attrs("rock", TempoClass::Fast, Valence::Positive, Energy::High);
    a.instruments.clear();
    assert!(ThumbnailSpec::build(anchor(), a, "").is_err());
}

#[test]
fn attributes_are_read_from_analysis() {
    let a = parse_music_analysis(include_str!("fixtures/responses/music_analysis.json")).unwrap();
    let m = attributes_from_analysis(&a);
    assert_eq!(m.genre, "acoustic");
    assert_eq!(m.instruments[0].name, "guitar");
    assert!(m.instruments.iter().any(|i| i.name == "piano"));
    assert_eq!(m.tempo_class, TempoClass::Slow);
    assert_eq!(m.valence, Valence::Neutral);
    assert_eq!(m.energy, Energy::Low);
    assert_eq!(m.emotion, "calm");
}

#[test]
fn tempo_thresholds() {
    let base = parse_music_analysis(include_str!("fixtures/responses/music_analysis.json")).unwrap();
    for (bpm, class) in [
        (80, TempoClass::Slow),
        (81, TempoClass::Medium),
        (119, TempoClass::Medium),
        (120, TempoClass::Fast),
        (150, TempoClass::Fast),
    ] {
        let mut a = base.clone();
        a.detailed_description = format!("Tempo: {bpm} BPM. Genre: jazz.");
        assert_eq!(attributes_from_analysis(&a).tempo_class, class, "{bpm}");
    }
}

fn project(title: &str, video_type: &str) -> Project {
    Project::new(ProjectId::new("p1"), title, video_type, "kids", "fun")
}

#[tokio::test]
async fn anchors_follow_the_video_subject() {
    let providers = Providers::mock(1);
    let octo = extract_anchors(&providers, &project("Ollie the octopus", "animation"), None).await.unwrap();
    assert_eq!(octo[0].kind, AnchorKind::Character);
    assert!(octo[0].description.contains("octopus"));
    let paris = extract_anchors(&providers, &project("Paris trip", "travel vlog"), None).await.unwrap();
    assert_eq!(paris[0].description, "A cinematic shot of the Eiffel Tower.");
    let talk = extract_anchors(&providers, &project("Weekly update", "talking head"), None).await.unwrap();
    assert_eq!(talk[0].kind, AnchorKind::HumanAvatar);
    assert!(talk[0].description.starts_with("A stylized avatar"));
}

#[tokio::test]
async fn anchor_lists_are_capped_and_cleaned() {
    let many = serde_json::json!({ "anchors": [
        { "kind": "character", "description": "A red fox", "sceneId": 1 },
        { "kind": "human", "description": "A photorealistic chef in a white hat", "sceneId": 2 },
        { "kind": "object_theme", "description": "A steaming bowl of ramen" },
        { "kind": "character", "description": "A blue bird" },
    ]});
    let llm = Arc::new(ScriptedLlm::new([Ok(many.to_string())]));
    let providers = Providers::mock(1).with_llm(llm);
    let anchors = extract_anchors(&providers, &project("Cooking", "recipe"), None).await.unwrap();
    assert_eq!(anchors.len(), 3);
    assert_eq!(anchors[0].description, "A red fox.");
    assert_eq!(anchors[1].description, "A stylized avatar of a chef in a white hat.");
    assert_eq!(anchors[1].source_scene_id, Some(2));
}

#[tokio::test]
async fn anchor_failure_after_retries() {
    let llm = Arc::new(ScriptedLlm::new((0..3).map(|_| Ok("no json here".to_string()))));
    let providers = Providers::mock(1).with_llm(llm.clone());
    let err = extract_anchors(&providers, &project("x", "y"), None).await.unwrap_err();
    assert!(matches!(err, EngineError::AnchorExtractionFailed(_)), "{err:?}");
    assert_eq!(llm.calls(), 3);
}

#[tokio::test]
async fn still_and_loop_render_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let store = AssetStore::open(dir.path()).unwrap();
    let providers = Providers::mock(2);
    let spec = ThumbnailSpec::build(
        anchor(),
        attrs("electronic", TempoClass::Fast, Valence::Positive, Energy::High),
        DEFAULT_STYLE_SUFFIX,
    )
    .unwrap();
    let still = render_static(&providers, &store, &spec).await.unwrap();
    let png = store.get(&still).unwrap();
    assert_eq!(png_prompt_hash(&png), Some(prompt_hash(&spec.fused_prompt)));
    let sidecar: serde_json::Value =
        serde_json::from_slice(&std::fs::read(store.sidecar_path(&still, SIDECAR_SUFFIX)).unwrap()).unwrap();
    assert_eq!(sidecar["prompt"], spec.fused_prompt);
    assert_eq!(sidecar["anchor_id"], "anchor-1");
    assert_eq!(sidecar["attributes"]["tempo_class"], "fast");

    let clip = render_animated(&providers, &store, Some(&still), &spec).await.unwrap();
    assert_eq!(clip.duration_s, ANIMATION_SECONDS);
    assert!(spec.animation_prompt().contains("rapid, energetic movements"));
    assert!(matches!(
        render_animated(&providers, &store, None, &spec).await,
        Err(EngineError::Precondition(_))
    ));
}
