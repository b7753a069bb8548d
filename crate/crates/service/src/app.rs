//! Service operations shared by the HTTP API and the command line.
//!
//! Long-running work is submitted as a job. A job reads a snapshot of the
//! project, calls the engine without holding the project lock, then takes the
//! lock, reloads, applies its results and saves.

use std::collections::BTreeSet;
use std::sync::Arc;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use futures::future::join_all;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use soundstage_core::assets::{sha256_hex, AssetRef};
use soundstage_core::audiokit::{fade_asset, trim_asset, FadeShape};
use soundstage_core::mapper::{self, LayoutExport};
use soundstage_core::model::{
    Fades, MusicAnalysis, Placement, Project, ProjectId, SceneId, Track, TrackFilter, TrackId, VideoAsset,
    DURATION_TOLERANCE_S,
};
use soundstage_core::Embedding64;
use soundstage_engine::analysis::{analyze_track, analyze_video, reusable_keywords, scenes_from_analysis, VideoInput};
use soundstage_engine::expander::{suggest_keywords, KeywordSuggestion};
use soundstage_engine::thumbnailer::{extract_anchors, fallback_anchor, render_animated, render_static, spec_for_track};
use soundstage_engine::{
    blend, edit, run_expansion, vary, EngineError, ExpansionConfig, GenerationRequest, RefineOutcome, DEFAULT_RETRIES,
};
use soundstage_providers::Providers;

use crate::config::Config;
use crate::error::{Result, ServiceError};
use crate::jobs::{Job, JobKind, JobManager, JobOutput, Progress};
use crate::storage::{CachedMap, Storage};

/// Fewer tracks than this and there is nothing to map.
pub const MIN_MAP_TRACKS: usize = 2;

#[derive(Clone)]
pub struct App {
    pub config: Arc<Config>,
    pub providers: Providers,
    pub storage: Storage,
    pub jobs: JobManager,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewProject {
    pub title: String,
    #[serde(default)]
    pub video_type: String,
    #[serde(default)]
    pub audience: String,
    #[serde(default)]
    pub soundtrack_goal: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoUpload {
    pub duration_s: f64,
    #[serde(default = "default_frame_rate")]
    pub frame_rate: f64,
    #[serde(default)]
    pub data_b64: Option<String>,
    #[serde(default)]
    pub mime: Option<String>,
}

fn default_frame_rate() -> f64 {
    30.0
}

/// A track as listed to clients: everything but the raw embedding, plus
/// derived fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackView {
    #[serde(flatten)]
    pub track: Value,
    pub reusable_keywords: Vec<String>,
    pub good_fit: Option<bool>,
    pub placed: bool,
}

impl TrackView {
    pub fn new(project: &Project, track: &Track) -> Self {
        let mut value = serde_json::to_value(track).expect("track serializes");
        if let Value::Object(m) = &mut value {
            m.remove("embedding");
        }
        Self {
            track: value,
            reusable_keywords: track
                .analysis
                .as_ref()
                .map(|a| reusable_keywords(a, &track.user_prompt, &track.title))
                .unwrap_or_default(),
            good_fit: track.analysis.as_ref().map(|_| track.good_fit()),
            placed: project.placements.iter().any(|p| p.track_id == track.id),
        }
    }
}

fn mime_ext(mime: Option<&str>) -> &'static str {
    match mime.unwrap_or("") {
        "video/mp4" => "mp4",
        "video/webm" => "webm",
        "video/quicktime" => "mov",
        "video/x-matroska" => "mkv",
        _ => "bin",
    }
}

fn ids(tracks: &[Track]) -> Vec<String> {
    tracks.iter().map(|t| t.id.to_string()).collect()
}

impl App {
    pub fn new(config: Config) -> Result<Self> {
        let providers = config.build_providers()?;
        Self::with_providers(config, providers)
    }

    pub fn with_providers(config: Config, providers: Providers) -> Result<Self> {
        let storage = Storage::open(&config.storage.data_dir)?;
        let jobs = JobManager::new(config.server.workers);
        Ok(Self { config: Arc::new(config), providers, storage, jobs })
    }

    /// Loads, changes and saves one project under its lock.
    pub async fn mutate<T>(&self, id: &ProjectId, f: impl FnOnce(&mut Project) -> Result<T>) -> Result<T> {
        let _guard = self.storage.lock(id).await;
        let mut project = self.storage.load(id)?;
        let out = f(&mut project)?;
        self.storage.save(&project)?;
        Ok(out)
    }

    pub fn project(&self, id: &ProjectId) -> Result<Project> {
        self.storage.load(id)
    }

    pub async fn create_project(&self, new: NewProject) -> Result<Project> {
        if new.title.trim().is_empty() {
            return Err(ServiceError::BadRequest("title must not be empty".into()));
        }
        let id = ProjectId::new(format!("prj_{}", uuid::Uuid::new_v4().simple()));
        let project = Project::new(id, new.title.trim(), new.video_type, new.audience, new.soundtrack_goal);
        let _guard = self.storage.lock(&project.id).await;
        self.storage.save(&project)?;
        Ok(project)
    }

    /// Segments the video into scenes and extracts visual anchors.
    pub async fn set_video(&self, id: &ProjectId, upload: VideoUpload) -> Result<Job> {
        if !(upload.duration_s > 0.0 && upload.duration_s.is_finite()) {
            return Err(ServiceError::BadRequest("duration_s must be positive".into()));
        }
        let input = match &upload.data_b64 {
            Some(b64) => Some(VideoInput {
                mime: upload.mime.clone().unwrap_or_else(|| "application/octet-stream".into()),
                bytes: B64.decode(b64).map_err(|e| ServiceError::BadRequest(format!("data_b64: {e}")))?,
            }),
            None => None,
        };
        let path = match &input {
            Some(v) => Some(self.storage.assets().put(&v.bytes, mime_ext(upload.mime.as_deref()))?),
            None => None,
        };
        let video = VideoAsset { path, duration: upload.duration_s, frame_rate: upload.frame_rate };
        self.mutate(id, |p| {
            p.video = Some(video.clone());
            p.set_scenes(Vec::new())?;
            p.anchors.clear();
            Ok(())
        })
        .await?;
        let app = self.clone();
        let pid = id.clone();
        Ok(self.jobs.submit(JobKind::Analyze, Some(id.to_string()), move |progress| async move {
            let analysis = analyze_video(&app.providers, &video, input.as_ref(), DEFAULT_RETRIES).await?;
            progress.set(0.4);
            let scenes = scenes_from_analysis(&app.providers, &analysis, video.duration).await?;
            progress.set(0.6);
            let mut snapshot = app.project(&pid)?;
            snapshot.set_scenes(scenes.clone())?;
            let mut warnings = Vec::new();
            let anchors = match extract_anchors(&app.providers, &snapshot, input.as_ref()).await {
                Ok(a) => a,
                Err(e) => {
                    warnings.push(format!("using the fallback anchor: {e}"));
                    vec![fallback_anchor()]
                }
            };
            let result_ids = scenes.iter().map(|s| s.scene_id.to_string()).collect();
            app.mutate(&pid, move |p| {
                p.set_scenes(scenes)?;
                p.anchors = anchors;
                Ok(())
            })
            .await?;
            Ok(JobOutput { result_ids, partial: false, warnings })
        }))
    }

    pub async fn generate(
        &self,
        id: &ProjectId,
        scene_id: SceneId,
        prompt: &str,
        config: Option<ExpansionConfig>,
    ) -> Result<Job> {
        let project = self.project(id)?;
        project.scene(scene_id)?;
        let config = config.unwrap_or_else(|| self.config.expansion.clone());
        config.validate()?;
        if prompt.trim().is_empty() {
            return Err(ServiceError::BadRequest("prompt must not be empty".into()));
        }
        let request = GenerationRequest { query: prompt.to_string(), scene_id, config };
        let app = self.clone();
        let pid = id.clone();
        Ok(self.jobs.submit(JobKind::Expand, Some(id.to_string()), move |progress| async move {
            let snapshot = app.project(&pid)?;
            let scene = snapshot.scene(scene_id)?;
            let outcome =
                run_expansion(&app.providers, app.storage.assets(), scene, snapshot.taste.prior.as_ref(), &request)
                    .await?;
            progress.set(0.5);
            let mut warnings: Vec<String> =
                outcome.failures.iter().map(|(p, e)| format!("generation for {p:?} failed: {e}")).collect();
            let result_ids = ids(&outcome.tracks);
            app.insert_and_finish(&pid, outcome.tracks, Vec::new(), &progress, &mut warnings).await?;
            Ok(JobOutput { result_ids, partial: outcome.partial, warnings })
        }))
    }

    /// Inserts new tracks, then analyses them and renders their thumbnails.
    /// Post-processing failures become warnings; the tracks stay.
    async fn insert_and_finish(
        &self,
        pid: &ProjectId,
        tracks: Vec<Track>,
        analysed: Vec<(TrackId, MusicAnalysis)>,
        progress: &Progress,
        warnings: &mut Vec<String>,
    ) -> Result<()> {
        let new_ids: Vec<TrackId> = tracks.iter().map(|t| t.id.clone()).collect();
        self.mutate(pid, |p| {
            for (id, a) in analysed {
                if let Ok(t) = p.track_mut(&id) {
                    t.analysis.get_or_insert(a);
                }
            }
            for t in tracks {
                p.insert_track(t)?;
            }
            Ok(())
        })
        .await?;
        let snapshot = self.project(pid)?;
        let results = join_all(new_ids.iter().map(|id| self.finish_track(&snapshot, id))).await;
        progress.set(0.9);
        let mut updates = Vec::new();
        for (id, r) in new_ids.iter().zip(results) {
            match r {
                Ok(u) => updates.push(u),
                Err((u, e)) => {
                    warnings.push(format!("track {id}: {e}"));
                    updates.push(u);
                }
            }
        }
        self.mutate(pid, |p| {
            for u in updates {
                if let Ok(t) = p.track_mut(&u.id) {
                    if u.analysis.is_some() {
                        t.analysis = u.analysis;
                    }
                    if u.thumbnail.is_some() {
                        t.static_thumbnail = u.thumbnail;
                    }
                }
            }
            Ok(())
        })
        .await
    }

    async fn finish_track(
        &self,
        project: &Project,
        id: &TrackId,
    ) -> std::result::Result<TrackUpdate, (TrackUpdate, EngineError)> {
        let mut update = TrackUpdate { id: id.clone(), analysis: None, thumbnail: None };
        let mut track = match project.track(id) {
            Ok(t) => t.clone(),
            Err(e) => return Err((update, e.into())),
        };
        if track.analysis.is_none() {
            match analyze_track(&self.providers, self.storage.assets(), project, &track, DEFAULT_RETRIES).await {
                Ok(a) => {
                    track.analysis = Some(a.clone());
                    update.analysis = Some(a);
                }
                Err(e) => return Err((update, e)),
            }
        }
        let spec = match spec_for_track(project, &track, &self.config.thumbnails.style_suffix) {
            Ok(s) => s,
            Err(e) => return Err((update, e)),
        };
        match render_static(&self.providers, self.storage.assets(), &spec).await {
            Ok(still) => {
                update.thumbnail = Some(still);
                Ok(update)
            }
            Err(e) => Err((update, e)),
        }
    }

    fn refine_job(&self, kind: JobKind, pid: ProjectId, run: RefineRun) -> Job {
        let app = self.clone();
        self.jobs.submit(kind, Some(pid.to_string()), move |progress| async move {
            let snapshot = app.project(&pid)?;
            let (providers, store, cfg) = (&app.providers, app.storage.assets(), &app.config.refine);
            let outcome: RefineOutcome = match &run {
                RefineRun::Edit(id, request) => edit(providers, store, &snapshot, id, request, cfg).await?,
                RefineRun::Vary(id) => vary(providers, store, &snapshot, id, cfg).await?,
                RefineRun::Blend(ids) => blend(providers, store, &snapshot, ids, cfg).await?,
            };
            progress.set(0.5);
            let mut warnings: Vec<String> =
                outcome.failures.iter().map(|(p, e)| format!("generation for {p:?} failed: {e}")).collect();
            let result_ids = ids(&outcome.tracks);
            app.insert_and_finish(&pid, outcome.tracks, outcome.analysed, &progress, &mut warnings).await?;
            Ok(JobOutput { result_ids, partial: outcome.partial, warnings })
        })
    }

    pub fn edit(&self, track: &TrackId, request: &str) -> Result<Job> {
        if request.trim().is_empty() {
            return Err(ServiceError::BadRequest("request must not be empty".into()));
        }
        let pid = self.storage.find_track(track)?;
        Ok(self.refine_job(JobKind::Edit, pid, RefineRun::Edit(track.clone(), request.to_string())))
    }

    pub fn vary(&self, track: &TrackId) -> Result<Job> {
        let pid = self.storage.find_track(track)?;
        Ok(self.refine_job(JobKind::Vary, pid, RefineRun::Vary(track.clone())))
    }

    pub fn blend(&self, id: &ProjectId, tracks: &[TrackId]) -> Result<Job> {
        let project = self.project(id)?;
        for t in tracks {
            project.track(t)?;
        }
        let unique: BTreeSet<&TrackId> = tracks.iter().collect();
        if unique.len() < 2 {
            return Err(EngineError::Arity { what: "blend", needed: 2, got: unique.len() }.into());
        }
        Ok(self.refine_job(JobKind::Blend, id.clone(), RefineRun::Blend(tracks.to_vec())))
    }

    /// Re-runs music analysis for one track.
    pub fn analyze(&self, track: &TrackId) -> Result<Job> {
        let pid = self.storage.find_track(track)?;
        let app = self.clone();
        let tid = track.clone();
        Ok(self.jobs.submit(JobKind::Analyze, Some(pid.to_string()), move |_| async move {
            let snapshot = app.project(&pid)?;
            let t = snapshot.track(&tid)?;
            let a = analyze_track(&app.providers, app.storage.assets(), &snapshot, t, DEFAULT_RETRIES).await?;
            app.mutate(&pid, |p| {
                p.track_mut(&tid)?.analysis = Some(a);
                Ok(())
            })
            .await?;
            Ok(JobOutput::done(vec![tid.to_string()]))
        }))
    }

    /// Renders the still thumbnail, and the eight-second loop when `animate`.
    pub fn thumbnail(&self, track: &TrackId, animate: bool) -> Result<Job> {
        let pid = self.storage.find_track(track)?;
        let app = self.clone();
        let tid = track.clone();
        Ok(self.jobs.submit(JobKind::Thumbnail, Some(pid.to_string()), move |progress| async move {
            let snapshot = app.project(&pid)?;
            let mut track = snapshot.track(&tid)?.clone();
            if track.analysis.is_none() {
                track.analysis =
                    Some(analyze_track(&app.providers, app.storage.assets(), &snapshot, &track, DEFAULT_RETRIES).await?);
            }
            let spec = spec_for_track(&snapshot, &track, &app.config.thumbnails.style_suffix)?;
            let still = match (&track.static_thumbnail, animate) {
                (Some(s), true) => s.clone(),
                _ => render_static(&app.providers, app.storage.assets(), &spec).await?,
            };
            progress.set(0.5);
            let clip = if animate {
                Some(render_animated(&app.providers, app.storage.assets(), Some(&still), &spec).await?)
            } else {
                None
            };
            let mut result_ids = vec![still.to_string()];
            result_ids.extend(clip.as_ref().map(|c| c.asset.to_string()));
            app.mutate(&pid, move |p| {
                let t = p.track_mut(&tid)?;
                if t.analysis.is_none() {
                    t.analysis = track.analysis;
                }
                t.static_thumbnail = Some(still);
                if clip.is_some() {
                    t.animated_thumbnail = clip;
                }
                Ok(())
            })
            .await?;
            Ok(JobOutput::done(result_ids))
        }))
    }

    pub fn list_tracks(&self, id: &ProjectId, filter: TrackFilter, query: Option<&str>) -> Result<Vec<TrackView>> {
        let project = self.project(id)?;
        Ok(project.filter_tracks(filter, query).into_iter().map(|t| TrackView::new(&project, t)).collect())
    }

    /// Places a track on a scene and renders the faded, scene-length audio.
    pub async fn attach(
        &self,
        id: &ProjectId,
        scene_id: SceneId,
        track: &TrackId,
        fades: Option<Fades>,
    ) -> Result<Placement> {
        let snapshot = self.project(id)?;
        let scene = snapshot.scene(scene_id)?.clone();
        let t = snapshot.track(track)?.clone();
        let fades = fades.unwrap_or_default();
        let store = self.storage.assets().clone();
        let rendered = tokio::task::spawn_blocking(move || -> Result<Option<AssetRef>> {
            if t.audio.duration < scene.duration() - DURATION_TOLERANCE_S {
                return Ok(None);
            }
            let fitted = if t.audio.duration > scene.duration() {
                trim_asset(&store, &t.audio, scene.duration()).map_err(EngineError::from)?
            } else {
                t.audio.clone()
            };
            let faded = fade_asset(&store, &fitted, fades.fade_in_ms, fades.fade_out_ms, FadeShape::Linear)
                .map_err(EngineError::from)?;
            Ok(Some(faded.path))
        })
        .await
        .map_err(|e| ServiceError::Storage(e.to_string()))??;
        self.mutate(id, |p| {
            p.attach_track(scene_id, track, Some(fades))?;
            let placement = p.placements.last_mut().expect("attached");
            placement.rendered_audio = rendered;
            Ok(placement.clone())
        })
        .await
    }

    pub async fn remove_placement(&self, id: &ProjectId, scene_id: SceneId, index: usize) -> Result<Placement> {
        self.mutate(id, |p| Ok(p.remove_placement(scene_id, index)?)).await
    }

    pub async fn set_active(&self, id: &ProjectId, scene_id: SceneId, index: usize) -> Result<()> {
        self.mutate(id, |p| Ok(p.set_active(scene_id, index)?)).await
    }

    pub fn suggestions(&self, id: &ProjectId, scene_id: SceneId, seed: u64) -> Result<KeywordSuggestion> {
        let project = self.project(id)?;
        Ok(suggest_keywords(&project.scene(scene_id)?.keyword_pools, seed)?)
    }

    /// The project's music map. Cached until the track set or the path changes;
    /// recomputed layouts are aligned to the previous one.
    pub async fn map(&self, id: &ProjectId) -> Result<LayoutExport> {
        let _guard = self.storage.lock(&ProjectId::new(format!("{id}#map"))).await;
        let project = self.project(id)?;
        if project.tracks.len() < MIN_MAP_TRACKS {
            return Err(ServiceError::InsufficientTracks { needed: MIN_MAP_TRACKS, got: project.tracks.len() });
        }
        let path = project.timeline_path();
        let fingerprint = map_fingerprint(&project, &path);
        let previous = self.storage.load_map(id)?;
        if let Some(c) = previous.as_ref().filter(|c| c.fingerprint == fingerprint) {
            return Ok(c.layout.export());
        }
        let items: Vec<(TrackId, Embedding64)> =
            project.tracks.values().map(|t| (t.id.clone(), t.embedding.cast::<f64>())).collect();
        let layout = tokio::task::spawn_blocking(move || match previous {
            Some(prev) => mapper::update_layout(&prev.layout, &items, &path),
            None => mapper::project(&items, &Default::default(), &path).map(|p| p.layout),
        })
        .await
        .map_err(|e| ServiceError::Map(e.to_string()))??;
        self.storage.save_map(id, &CachedMap { fingerprint, layout: layout.clone() })?;
        Ok(layout.export())
    }

    /// Computes the map in the background.
    pub fn map_job(&self, id: &ProjectId) -> Result<Job> {
        self.project(id)?;
        let app = self.clone();
        let pid = id.clone();
        Ok(self.jobs.submit(JobKind::Map, Some(id.to_string()), move |_| async move {
            let export = app.map(&pid).await?;
            Ok(JobOutput::done(export.points.into_iter().map(|p| p.id.to_string()).collect()))
        }))
    }

    pub fn asset(&self, hash: &str) -> Result<(AssetRef, Vec<u8>)> {
        if hash.len() != 64 || !hash.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(ServiceError::not_found("asset", hash));
        }
        let r = self.storage.assets().find_by_hash(hash)?;
        let bytes = self.storage.assets().get(&r)?;
        Ok((r, bytes))
    }
}

struct TrackUpdate {
    id: TrackId,
    analysis: Option<MusicAnalysis>,
    thumbnail: Option<AssetRef>,
}

enum RefineRun {
    Edit(TrackId, String),
    Vary(TrackId),
    Blend(Vec<TrackId>),
}

fn map_fingerprint(project: &Project, path: &[TrackId]) -> String {
    let mut text = String::new();
    for t in project.tracks.keys() {
        text.push_str(t.as_str());
        text.push('\n');
    }
    text.push('|');
    for t in path {
        text.push_str(t.as_str());
        text.push('\n');
    }
    sha256_hex(text.as_bytes())
}
