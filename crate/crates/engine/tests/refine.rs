mod common;

use std::sync::Arc;

use soundstage_core::assets::AssetStore;
use soundstage_core::model::{LineageKind, Project, ProjectId, Track, TrackId, VideoAsset};
use soundstage_core::vecmath::cosine_similarity;
use soundstage_engine::analysis::{analyze_track, analyze_video, reusable_keywords, scenes_from_analysis};
use soundstage_engine::schema::Rule;
use soundstage_engine::{
    blend, edit, run_expansion, vary, EngineError, ExpansionConfig, GenerationRequest, RefineConfig, RefinePlan,
    DEFAULT_RETRIES,
};
use soundstage_providers::mock::{MockLlm, MockMusic, ScriptedLlm};
use soundstage_providers::{LlmProvider, Providers};

fn video(duration: f64) -> VideoAsset {
    VideoAsset { path: None, duration, frame_rate: 30.0 }
}

/// A 60 s project with scenes and one expansion of four tracks in scene 1.
async fn setup(providers: &Providers, store: &AssetStore) -> (Project, Vec<TrackId>) {
    let mut p = Project::new(ProjectId::new("p"), "Ollie the octopus", "octopus", "kids", "playful");
    p.video = Some(video(60.0));
    let a = analyze_video(providers, p.video.as_ref().unwrap(), None, DEFAULT_RETRIES).await.unwrap();
    p.set_scenes(scenes_from_analysis(providers, &a, 60.0).await.unwrap()).unwrap();
    let req = GenerationRequest { query: "calm piano".into(), scene_id: 1, config: ExpansionConfig::default() };
    let out = run_expansion(providers, store, p.scene(1).unwrap(), None, &req).await.unwrap();
    let ids: Vec<TrackId> = out.tracks.iter().map(|t| t.id.clone()).collect();
    for t in out.tracks {
        p.insert_track(t).unwrap();
    }
    (p, ids)
}

fn insert_all(p: &mut Project, tracks: &[Track]) {
    for t in tracks {
        p.insert_track(t.clone()).unwrap();
    }
}

#[tokio::test]
async fn sixty_second_video_tiles_into_scenes() {
    let providers = Providers::mock(1);
    let a = analyze_video(&providers, &video(60.0), None, DEFAULT_RETRIES).await.unwrap();
    let scenes = scenes_from_analysis(&providers, &a, 60.0).await.unwrap();
    assert_eq!(scenes.len(), 2);
    assert_eq!(scenes[0].start, 0.0);
    assert_eq!(scenes.last().unwrap().end, 60.0);
    for w in scenes.windows(2) {
        assert_eq!(w[0].end, w[1].start);
    }
    for s in &scenes {
        assert!(s.keyword_pools.min_len() >= 5);
        assert!(s.vibe_embedding.is_unit());
    }
}

#[tokio::test]
async fn too_short_video_cannot_be_segmented() {
    let providers = Providers::mock(1);
    let err = analyze_video(&providers, &video(20.0), None, DEFAULT_RETRIES).await.unwrap_err();
    match err {
        EngineError::AnalysisFailed { violation, attempts } => {
            assert_eq!(violation.rule, Rule::SceneDuration);
            assert_eq!(attempts, 3);
        }
        other => panic!("{other:?}"),
    }
}

#[tokio::test]
async fn rejected_response_is_retried_with_feedback() {
    let mock = MockLlm::new(1);
    let providers = Providers::mock(1);
    let good = {
        let req = soundstage_providers::LlmRequest {
            template_id: soundstage_core::templates::TemplateId::VideoAnalysis,
            prompt: String::new(),
            variables: soundstage_core::templates::Variables::new().text("videoDuration", "60"),
            attachments: vec![],
            feedback: None,
        };
        mock.complete(&req).await.unwrap()
    };
    let scripted = Arc::new(ScriptedLlm::new([Ok("{\"videoAnalysis\": {}}".to_string()), Ok(good)]));
    let providers = providers.with_llm(scripted.clone());
    analyze_video(&providers, &video(60.0), None, DEFAULT_RETRIES).await.unwrap();
    let reqs = scripted.requests();
    assert_eq!(reqs.len(), 2);
    assert_eq!(reqs[0].feedback, None);
    assert!(reqs[1].feedback.as_deref().unwrap().contains("missing_field"));
}

#[tokio::test]
async fn track_analysis_and_keywords() {
    let dir = tempfile::tempdir().unwrap();
    let store = AssetStore::open(dir.path()).unwrap();
    let providers = Providers::mock(4);
    let (p, ids) = setup(&providers, &store).await;
    let t = p.track(&ids[0]).unwrap();
    let a = analyze_track(&providers, &store, &p, t, DEFAULT_RETRIES).await.unwrap();
    assert_eq!(a.tags.len(), 3);
    let kws = reusable_keywords(&a, &t.user_prompt, &t.title);
    assert!(!kws.is_empty() && kws.len() <= 6);
    for k in &kws {
        assert!(!t.user_prompt.to_lowercase().contains(&k.to_lowercase()), "{k}");
    }
}

#[tokio::test]
async fn edit_produces_four_children_and_repairs_missing_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let store = AssetStore::open(dir.path()).unwrap();
    let providers = Providers::mock(2);
    let (mut p, ids) = setup(&providers, &store).await;
    assert!(p.track(&ids[0]).unwrap().analysis.is_none());
    let out = edit(&providers, &store, &p, &ids[0], "make it calmer", &RefineConfig::default()).await.unwrap();
    assert_eq!(out.analysed.len(), 1);
    assert_eq!(out.tracks.len(), 4);
    assert!(!out.partial);
    let titles: Vec<&str> = out.tracks.iter().map(|t| t.title.as_str()).collect();
    assert!(titles.contains(&"Calmed Down"), "{titles:?}");
    let RefinePlan::Edit(plan) = &out.plan else { panic!() };
    for (t, v) in out.tracks.iter().zip(&plan.variations) {
        assert_eq!(t.lineage.kind, LineageKind::Edit);
        assert_eq!(t.lineage.parent_ids, vec![ids[0].clone()]);
        assert_eq!(t.lineage.instruction.as_deref(), Some("make it calmer"));
        assert_eq!(t.lineage.emphasis.as_deref(), Some(v.emphasis.as_str()));
        assert_eq!(t.full_prompt, v.description);
        assert!((t.audio.duration - p.track(&ids[0]).unwrap().audio.duration).abs() < 1e-6);
    }
    insert_all(&mut p, &out.tracks);
    assert!(p.lineage_is_acyclic());
}

#[tokio::test]
async fn edit_with_invalid_plans_fails_after_retries() {
    let dir = tempfile::tempdir().unwrap();
    let store = AssetStore::open(dir.path()).unwrap();
    let providers = Providers::mock(2);
    let (mut p, ids) = setup(&providers, &store).await;
    let t = p.track(&ids[0]).unwrap().clone();
    let analysis = analyze_track(&providers, &store, &p, &t, DEFAULT_RETRIES).await.unwrap();
    p.track_mut(&ids[0]).unwrap().analysis = Some(analysis);
    let long = serde_json::json!({ "variations": (0..4).map(|_| serde_json::json!({
        "description": "x", "title": "Overall Rhythmic Textural Enhancement Pass", "emphasis": "y"
    })).collect::<Vec<_>>() })
    .to_string();
    let scripted = Arc::new(ScriptedLlm::new((0..3).map(|_| Ok(long.clone()))));
    let providers = providers.with_llm(scripted.clone());
    let err = edit(&providers, &store, &p, &ids[0], "make it calmer", &RefineConfig::default()).await.unwrap_err();
    match err {
        EngineError::RefineFailed { violation, attempts } => {
            assert_eq!(violation.rule, Rule::EditTitleWords);
            assert_eq!(attempts, 3);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(scripted.calls(), 3);
}

#[tokio::test]
async fn cross_candidate_edits_point_to_blend() {
    let dir = tempfile::tempdir().unwrap();
    let store = AssetStore::open(dir.path()).unwrap();
    let providers = Providers::mock(2);
    let (p, ids) = setup(&providers, &store).await;
    let err = edit(&providers, &store, &p, &ids[0], "add the drums from option 2", &RefineConfig::default())
        .await
        .unwrap_err();
    match err {
        EngineError::Unsupported(msg) => assert!(msg.contains("blend")),
        other => panic!("{other:?}"),
    }
}

#[tokio::test]
async fn vary_children_stay_near_the_parent() {
    let dir = tempfile::tempdir().unwrap();
    let store = AssetStore::open(dir.path()).unwrap();
    let providers = Providers::mock(3);
    let (p, ids) = setup(&providers, &store).await;
    let parent = p.track(&ids[0]).unwrap();
    let out = vary(&providers, &store, &p, &ids[0], &RefineConfig::default()).await.unwrap();
    assert_eq!(out.tracks.len(), 4);
    let unrelated = p.track(&ids[3]).unwrap();
    for (i, c) in out.tracks.iter().enumerate() {
        assert_eq!(c.lineage.kind, LineageKind::Vary);
        assert_eq!(c.lineage.parent_ids, vec![parent.id.clone()]);
        assert_eq!(c.title, format!("{} (Variation {})", parent.title, i + 1));
        let near = cosine_similarity(&c.embedding, &parent.embedding).unwrap();
        let far = cosine_similarity(&c.embedding, &unrelated.embedding).unwrap();
        assert!(near > far, "{near} <= {far}");
        assert!(c.audio.path != parent.audio.path);
    }
}

#[tokio::test]
async fn vary_needs_audio_conditioning() {
    let dir = tempfile::tempdir().unwrap();
    let store = AssetStore::open(dir.path()).unwrap();
    let providers = Providers::mock(3);
    let (p, ids) = setup(&providers, &store).await;
    let text_only = providers.with_music(Arc::new(MockMusic::text_only(3)));
    let err = vary(&text_only, &store, &p, &ids[0], &RefineConfig::default()).await.unwrap_err();
    assert_eq!(err.code(), "unsupported_capability", "{err:?}");
    let missing = TrackId::new("trk_gone");
    let err = vary(&Providers::mock(3), &store, &p, &missing, &RefineConfig::default()).await.unwrap_err();
    assert_eq!(err.code(), "not_found");
}

#[tokio::test]
async fn blend_needs_two_tracks_and_records_both_parents() {
    let dir = tempfile::tempdir().unwrap();
    let store = AssetStore::open(dir.path()).unwrap();
    let providers = Providers::mock(5);
    let (mut p, ids) = setup(&providers, &store).await;
    let err = blend(&providers, &store, &p, &ids[..1], &RefineConfig::default()).await.unwrap_err();
    assert!(matches!(err, EngineError::Arity { needed: 2, got: 1, .. }), "{err:?}");
    let dup = [ids[0].clone(), ids[0].clone()];
    assert!(matches!(
        blend(&providers, &store, &p, &dup, &RefineConfig::default()).await,
        Err(EngineError::Arity { .. })
    ));

    let out = blend(&providers, &store, &p, &ids[..3], &RefineConfig::default()).await.unwrap();
    assert_eq!(out.analysed.len(), 3);
    let RefinePlan::Blend(plan) = &out.plan else { panic!() };
    assert_eq!(out.tracks.len(), 4);
    for (t, v) in out.tracks.iter().zip(&plan.variations) {
        assert_eq!(t.lineage.kind, LineageKind::Blend);
        assert_eq!(t.lineage.parent_ids, ids[..3].to_vec());
        assert_eq!(t.full_prompt, format!("{}; emphasis: {}", plan.common_description, v.emphasis));
        assert_eq!(t.title, v.title);
    }
    insert_all(&mut p, &out.tracks);
    assert!(p.lineage_is_acyclic());
    p.validate().unwrap();
}
