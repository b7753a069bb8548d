//! Edit, vary and blend: new candidates derived from existing tracks.

use std::time::Duration;

use futures::future::join_all;
use regex::Regex;
use serde::{Deserialize, Serialize};
use soundstage_core::assets::AssetStore;
use soundstage_core::model::{
    normalize_ws, Lineage, LineageKind, MusicAnalysis, Project, ScoreBreakdown, Track, TrackId,
};
use soundstage_core::templates::{TemplateId, Variables};
use soundstage_core::Embedding;
use soundstage_providers::{Capability, MusicRequest, ProviderError, Providers};
use tokio::sync::Semaphore;

use crate::analysis::analyze_track;
use crate::ask::{ask, DEFAULT_RETRIES};
use crate::error::{EngineError, Result};
use crate::expander::{generate_and_embed, new_track_id, score_candidate};
use crate::schema::{self, BlendPlan, EditPlan};

pub const REFINE_VARIATIONS: usize = 4;
pub const MIN_BLEND_INPUTS: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub parallelism: usize,
    pub retries: u32,
    pub alpha: f64,
    #[serde(skip, default = "default_timeout")]
    pub call_timeout: Duration,
}

fn default_timeout() -> Duration {
    Duration::from_secs(120)
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { parallelism: 6, retries: DEFAULT_RETRIES, alpha: 0.5, call_timeout: default_timeout() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RefinePlan {
    Edit(EditPlan),
    Vary,
    Blend(BlendPlan),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineOutcome {
    /// In plan order; failed generations are missing.
    pub tracks: Vec<Track>,
    pub partial: bool,
    pub failures: Vec<(String, ProviderError)>,
    pub plan: RefinePlan,
    /// Analyses that had to be run first; the caller should store them.
    pub analysed: Vec<(TrackId, MusicAnalysis)>,
}

struct Job {
    title: String,
    user_prompt: String,
    request: MusicRequest,
    lineage: Lineage,
}

/// Edit requests that point at another candidate cannot be honoured.
pub fn cross_reference(request: &str) -> Option<String> {
    let re = Regex::new(r"(?i)\b(from|like|of)\s+(option|track|candidate|variation|number)\s*#?\s*\d+").expect("static regex");
    re.find(request).map(|m| m.as_str().to_string())
}

async fn ensure_analysis(
    providers: &Providers,
    store: &AssetStore,
    project: &Project,
    track: &Track,
    retries: u32,
    analysed: &mut Vec<(TrackId, MusicAnalysis)>,
) -> Result<MusicAnalysis> {
    if let Some(a) = &track.analysis {
        return Ok(a.clone());
    }
    tracing::info!(track = %track.id, "analysing before refinement");
    let a = analyze_track(providers, store, project, track, retries).await?;
    analysed.push((track.id.clone(), a.clone()));
    Ok(a)
}

fn score_for(project: &Project, track_scene: Option<u32>, z: &Embedding, alpha: f64) -> Result<ScoreBreakdown> {
    let prior = project.taste.prior.as_ref();
    match track_scene.and_then(|id| project.scene(id).ok()) {
        Some(scene) => score_candidate(z, &scene.vibe_embedding, prior, alpha),
        None => {
            let taste = prior.map(|u| soundstage_core::vecmath::cosine_similarity(z, u)).transpose()?;
            Ok(ScoreBreakdown::compose(0.0, taste, alpha))
        }
    }
}

async fn run_jobs(
    providers: &Providers,
    store: &AssetStore,
    project: &Project,
    scene_id: Option<u32>,
    jobs: Vec<Job>,
    config: &RefineConfig,
) -> Result<(Vec<Track>, Vec<(String, ProviderError)>)> {
    let limiter = Semaphore::new(config.parallelism.max(1));
    let results = join_all(
        jobs.iter()
            .map(|j| generate_and_embed(providers, store, &limiter, config.call_timeout, j.request.clone())),
    )
    .await;
    let mut tracks = Vec::new();
    let mut failures = Vec::new();
    for (job, result) in jobs.into_iter().zip(results) {
        match result {
            Ok((audio, embedding)) => {
                let score = score_for(project, scene_id, &embedding, config.alpha)?;
                let full_prompt = if job.request.prompt.is_empty() {
                    job.user_prompt.clone()
                } else {
                    job.request.prompt.clone()
                };
                tracks.push(Track {
                    id: new_track_id(),
                    user_prompt: job.user_prompt,
                    modifier: String::new(),
                    full_prompt,
                    title: job.title,
                    scene_id,
                    audio,
                    embedding,
                    score,
                    analysis: None,
                    static_thumbnail: None,
                    animated_thumbnail: None,
                    lineage: job.lineage,
                });
            }
            Err(e) => {
                tracing::warn!(title = %job.title, error = %e, "refinement generation dropped");
                failures.push((job.title, e));
            }
        }
    }
    if tracks.is_empty() {
        return Err(EngineError::ExpansionFailed(format!(
            "all {} generations failed; first error: {}",
            failures.len(),
            failures.first().map(|f| f.1.to_string()).unwrap_or_default()
        )));
    }
    Ok((tracks, failures))
}

pub async fn edit(
    providers: &Providers,
    store: &AssetStore,
    project: &Project,
    track_id: &TrackId,
    request: &str,
    config: &RefineConfig,
) -> Result<RefineOutcome> {
    let track = project.track(track_id)?;
    let request = normalize_ws(request);
    if request.is_empty() {
        return Err(EngineError::Precondition("empty edit request".into()));
    }
    if let Some(r) = cross_reference(&request) {
        return Err(EngineError::Unsupported(format!(
            "edits cannot reference other candidates ({r:?}); select both tracks on the map and use blend instead"
        )));
    }
    providers.require(&[Capability::TextToMusic, Capability::AudioEmbedding])?;
    let mut analysed = Vec::new();
    let analysis = ensure_analysis(providers, store, project, track, config.retries, &mut analysed).await?;
    let vars = Variables::new()
        .text("editRequest", &request)
        .text("originalMusicDescription", &analysis.detailed_description)
        .text("originalPrompt", &track.full_prompt);
    let plan = ask(providers, TemplateId::EditExpansion, &vars, &[], config.retries, |t| {
        schema::parse_edit_plan(t, &request)
    })
    .await?
    .map_err(|r| EngineError::RefineFailed { violation: r.violation, attempts: r.attempts })?;
    let duration = track.audio.duration;
    let jobs = plan
        .variations
        .iter()
        .map(|v| Job {
            title: v.title.clone(),
            user_prompt: v.description.clone(),
            request: MusicRequest::text(v.description.clone(), duration),
            lineage: Lineage {
                kind: LineageKind::Edit,
                parent_ids: vec![track.id.clone()],
                instruction: Some(request.clone()),
                emphasis: Some(v.emphasis.clone()).filter(|e| !e.is_empty()),
            },
        })
        .collect();
    let (tracks, failures) = run_jobs(providers, store, project, track.scene_id, jobs, config).await?;
    Ok(RefineOutcome {
        partial: tracks.len() < REFINE_VARIATIONS,
        tracks,
        failures,
        plan: RefinePlan::Edit(plan),
        analysed,
    })
}

pub async fn vary(
    providers: &Providers,
    store: &AssetStore,
    project: &Project,
    track_id: &TrackId,
    config: &RefineConfig,
) -> Result<RefineOutcome> {
    let track = project.track(track_id)?;
    providers.require(&[Capability::AudioConditionedMusic, Capability::AudioEmbedding])?;
    let parent = store.get(&track.audio.path)?;
    let duration = track.audio.duration;
    let jobs = (1..=REFINE_VARIATIONS as u32)
        .map(|i| Job {
            title: format!("{} (Variation {i})", track.title),
            user_prompt: track.user_prompt.clone(),
            request: MusicRequest::conditioned(parent.clone(), duration, i),
            lineage: Lineage {
                kind: LineageKind::Vary,
                parent_ids: vec![track.id.clone()],
                instruction: None,
                emphasis: Some(format!("audio-conditioned variation {i}")),
            },
        })
        .collect();
    let (mut tracks, failures) = run_jobs(providers, store, project, track.scene_id, jobs, config).await?;
    for t in &mut tracks {
        t.full_prompt = track.full_prompt.clone();
        t.modifier = track.modifier.clone();
    }
    Ok(RefineOutcome {
        partial: tracks.len() < REFINE_VARIATIONS,
        tracks,
        failures,
        plan: RefinePlan::Vary,
        analysed: Vec::new(),
    })
}

/// `common; emphasis: <emphasis>`
pub fn blend_prompt(common: &str, emphasis: &str) -> String {
    format!("{}; emphasis: {}", common.trim(), emphasis.trim())
}

pub async fn blend(
    providers: &Providers,
    store: &AssetStore,
    project: &Project,
    track_ids: &[TrackId],
    config: &RefineConfig,
) -> Result<RefineOutcome> {
    let mut unique: Vec<&TrackId> = Vec::new();
    for id in track_ids {
        if !unique.contains(&id) {
            unique.push(id);
        }
    }
    if unique.len() < MIN_BLEND_INPUTS {
        return Err(EngineError::Arity { what: "blend inputs", needed: MIN_BLEND_INPUTS, got: unique.len() });
    }
    let tracks: Vec<&Track> = unique.iter().map(|id| project.track(id)).collect::<std::result::Result<_, _>>()?;
    providers.require(&[Capability::TextToMusic, Capability::AudioEmbedding])?;
    let mut analysed = Vec::new();
    let mut descriptions = Vec::with_capacity(tracks.len());
    for t in &tracks {
        descriptions.push(ensure_analysis(providers, store, project, t, config.retries, &mut analysed).await?.detailed_description);
    }
    let vars = Variables::new().list("musicDescriptions", descriptions);
    let plan = ask(providers, TemplateId::BlendExpansion, &vars, &[], config.retries, schema::parse_blend_plan)
        .await?
        .map_err(|r| EngineError::RefineFailed { violation: r.violation, attempts: r.attempts })?;

    let first_scene = tracks[0].scene_id;
    let scene_id = first_scene.filter(|_| tracks.iter().all(|t| t.scene_id == first_scene)).or(first_scene);
    let duration = match scene_id.and_then(|id| project.scene(id).ok()) {
        Some(s) => s.duration(),
        None => tracks[0].audio.duration,
    };
    let parents: Vec<TrackId> = tracks.iter().map(|t| t.id.clone()).collect();
    let jobs = plan
        .variations
        .iter()
        .map(|v| {
            let prompt = blend_prompt(&plan.common_description, &v.emphasis);
            Job {
                title: v.title.clone(),
                user_prompt: prompt.clone(),
                request: MusicRequest::text(prompt, duration),
                lineage: Lineage {
                    kind: LineageKind::Blend,
                    parent_ids: parents.clone(),
                    instruction: None,
                    emphasis: Some(v.emphasis.clone()),
                },
            }
        })
        .collect();
    let (tracks, failures) = run_jobs(providers, store, project, scene_id, jobs, config).await?;
    Ok(RefineOutcome {
        partial: tracks.len() < REFINE_VARIATIONS,
        tracks,
        failures,
        plan: RefinePlan::Blend(plan),
        analysed,
    })
}
