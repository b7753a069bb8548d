use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::types::*;
use crate::vecmath::{self, VecMathError};

pub const SCHEMA_VERSION: u32 = 1;

/// Slack allowed when a track is a little shorter than its scene.
pub const DURATION_TOLERANCE_S: f64 = 0.050;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{kind} not found: {id}")]
    NotFound { kind: &'static str, id: String },
    #[error("track {track} lasts {track_s:.3} s but scene {scene} needs {scene_s:.3} s")]
    DurationMismatch {
        track: TrackId,
        scene: SceneId,
        track_s: f64,
        scene_s: f64,
    },
    #[error("invalid lineage for {track}: {reason}")]
    InvalidLineage { track: TrackId, reason: String },
    #[error("lineage cycle through {0}")]
    LineageCycle(TrackId),
    #[error("duplicate track id {0}")]
    DuplicateTrack(TrackId),
    #[error("invalid project: {0}")]
    Invalid(String),
}

impl ModelError {
    fn scene(id: SceneId) -> Self {
        Self::NotFound {
            kind: "scene",
            id: id.to_string(),
        }
    }

    fn track(id: &TrackId) -> Self {
        Self::NotFound {
            kind: "track",
            id: id.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fades {
    pub fade_in_ms: u32,
    pub fade_out_ms: u32,
}

impl Default for Fades {
    fn default() -> Self {
        Self {
            fade_in_ms: 500,
            fade_out_ms: 500,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackFilter {
    #[default]
    All,
    Added,
    GoodFit,
}

impl std::str::FromStr for TrackFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "" | "all" => Ok(Self::All),
            "added" => Ok(Self::Added),
            "good_fit" | "goodfit" => Ok(Self::GoodFit),
            other => Err(format!("unknown filter {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub schema_version: u32,
    pub id: ProjectId,
    pub title: String,
    pub video_type: String,
    pub audience: String,
    pub soundtrack_goal: String,
    pub video: Option<VideoAsset>,
    pub scenes: Vec<SceneSegment>,
    pub tracks: BTreeMap<TrackId, Track>,
    pub placements: Vec<Placement>,
    pub taste: TasteProfile,
    #[serde(default)]
    pub anchors: Vec<VisualAnchor>,
}

impl Project {
    pub fn new(
        id: ProjectId,
        title: impl Into<String>,
        video_type: impl Into<String>,
        audience: impl Into<String>,
        soundtrack_goal: impl Into<String>,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            id,
            title: title.into(),
            video_type: video_type.into(),
            audience: audience.into(),
            soundtrack_goal: soundtrack_goal.into(),
            video: None,
            scenes: Vec::new(),
            tracks: BTreeMap::new(),
            placements: Vec::new(),
            taste: TasteProfile::default(),
            anchors: Vec::new(),
        }
    }

    pub fn scene(&self, id: SceneId) -> Result<&SceneSegment, ModelError> {
        self.scenes
            .iter()
            .find(|s| s.scene_id == id)
            .ok_or_else(|| ModelError::scene(id))
    }

    pub fn scene_mut(&mut self, id: SceneId) -> Result<&mut SceneSegment, ModelError> {
        self.scenes
            .iter_mut()
            .find(|s| s.scene_id == id)
            .ok_or_else(|| ModelError::scene(id))
    }

    pub fn track(&self, id: &TrackId) -> Result<&Track, ModelError> {
        self.tracks.get(id).ok_or_else(|| ModelError::track(id))
    }

    pub fn track_mut(&mut self, id: &TrackId) -> Result<&mut Track, ModelError> {
        self.tracks.get_mut(id).ok_or_else(|| ModelError::track(id))
    }

    /// Replaces the scene list, sorted by start time.
    pub fn set_scenes(&mut self, mut scenes: Vec<SceneSegment>) -> Result<(), ModelError> {
        scenes.sort_by(|a, b| a.start.total_cmp(&b.start));
        let duration = self.video.as_ref().map(|v| v.duration);
        for s in &scenes {
            if !(s.start >= 0.0 && s.start < s.end) {
                return Err(ModelError::Invalid(format!("scene {} has an empty range", s.scene_id)));
            }
            if let Some(d) = duration {
                if s.end > d + 1e-6 {
                    return Err(ModelError::Invalid(format!(
                        "scene {} ends after the video ({} > {d})",
                        s.scene_id, s.end
                    )));
                }
            }
        }
        self.placements.retain(|p| scenes.iter().any(|s| s.scene_id == p.scene_id));
        self.scenes = scenes;
        self.recompute_taste();
        Ok(())
    }

    /// Adds a track after checking its own invariants and the lineage graph.
    pub fn insert_track(&mut self, track: Track) -> Result<(), ModelError> {
        if self.tracks.contains_key(&track.id) {
            return Err(ModelError::DuplicateTrack(track.id));
        }
        track.check().map_err(|reason| ModelError::InvalidLineage {
            track: track.id.clone(),
            reason,
        })?;
        if self.has_ancestor(&track.lineage.parent_ids, &track.id) {
            return Err(ModelError::LineageCycle(track.id));
        }
        self.tracks.insert(track.id.clone(), track);
        Ok(())
    }

    /// True when `target` is reachable from `start` through known parents.
    fn has_ancestor(&self, start: &[TrackId], target: &TrackId) -> bool {
        let mut stack: Vec<&TrackId> = start.iter().collect();
        let mut seen = HashSet::new();
        while let Some(id) = stack.pop() {
            if id == target {
                return true;
            }
            if !seen.insert(id) {
                continue;
            }
            if let Some(t) = self.tracks.get(id) {
                stack.extend(t.lineage.parent_ids.iter());
            }
        }
        false
    }

    /// Every track's ancestor chain (over tracks still present) excludes itself.
    pub fn lineage_is_acyclic(&self) -> bool {
        self.tracks
            .values()
            .all(|t| !self.has_ancestor(&t.lineage.parent_ids, &t.id))
    }

    /// Removes a track and its placements. Lineage references from other
    /// tracks are kept as dangling ids.
    pub fn remove_track(&mut self, id: &TrackId) -> Result<Track, ModelError> {
        let track = self.tracks.remove(id).ok_or_else(|| ModelError::track(id))?;
        let scenes: Vec<SceneId> = self
            .placements
            .iter()
            .filter(|p| &p.track_id == id)
            .map(|p| p.scene_id)
            .collect();
        self.placements.retain(|p| &p.track_id != id);
        for scene in scenes {
            self.repack(scene);
        }
        self.recompute_taste();
        Ok(track)
    }

    pub fn attach_track(
        &mut self,
        scene_id: SceneId,
        track_id: &TrackId,
        fades: Option<Fades>,
    ) -> Result<&Placement, ModelError> {
        let scene = self.scene(scene_id)?;
        let track = self.track(track_id)?;
        if track.audio.duration < scene.duration() - DURATION_TOLERANCE_S {
            return Err(ModelError::DurationMismatch {
                track: track_id.clone(),
                scene: scene_id,
                track_s: track.audio.duration,
                scene_s: scene.duration(),
            });
        }
        let fades = fades.unwrap_or_default();
        let count = self.placements.iter().filter(|p| p.scene_id == scene_id).count();
        self.placements.push(Placement {
            scene_id,
            track_id: track_id.clone(),
            alternative_index: count,
            active: count == 0,
            fade_in_ms: fades.fade_in_ms,
            fade_out_ms: fades.fade_out_ms,
            rendered_audio: None,
        });
        self.recompute_taste();
        Ok(self.placements.last().expect("just pushed"))
    }

    pub fn remove_placement(
        &mut self,
        scene_id: SceneId,
        alternative_index: usize,
    ) -> Result<Placement, ModelError> {
        let pos = self
            .placements
            .iter()
            .position(|p| p.scene_id == scene_id && p.alternative_index == alternative_index)
            .ok_or_else(|| ModelError::NotFound {
                kind: "placement",
                id: format!("{scene_id}/{alternative_index}"),
            })?;
        let removed = self.placements.remove(pos);
        self.repack(scene_id);
        self.recompute_taste();
        Ok(removed)
    }

    pub fn set_active(&mut self, scene_id: SceneId, alternative_index: usize) -> Result<(), ModelError> {
        if !self
            .placements
            .iter()
            .any(|p| p.scene_id == scene_id && p.alternative_index == alternative_index)
        {
            return Err(ModelError::NotFound {
                kind: "placement",
                id: format!("{scene_id}/{alternative_index}"),
            });
        }
        for p in self.placements.iter_mut().filter(|p| p.scene_id == scene_id) {
            p.active = p.alternative_index == alternative_index;
        }
        Ok(())
    }

    // Restores indices 0..k-1 (keeping relative order) and a single active entry.
    fn repack(&mut self, scene_id: SceneId) {
        let mut entries: Vec<&mut Placement> = self
            .placements
            .iter_mut()
            .filter(|p| p.scene_id == scene_id)
            .collect();
        entries.sort_by_key(|p| p.alternative_index);
        let has_active = entries.iter().any(|p| p.active);
        for (i, p) in entries.into_iter().enumerate() {
            p.alternative_index = i;
            if !has_active {
                p.active = i == 0;
            }
        }
    }

    pub fn list_alternatives(&self, scene_id: SceneId) -> Result<Vec<&Track>, ModelError> {
        self.scene(scene_id)?;
        let mut placements: Vec<&Placement> = self
            .placements
            .iter()
            .filter(|p| p.scene_id == scene_id)
            .collect();
        placements.sort_by_key(|p| p.alternative_index);
        placements.into_iter().map(|p| self.track(&p.track_id)).collect()
    }

    pub fn filter_tracks(&self, filter: TrackFilter, query: Option<&str>) -> Vec<&Track> {
        let query = query
            .map(str::trim)
            .filter(|q| !q.is_empty())
            .map(str::to_lowercase);
        let added: HashSet<&TrackId> = self.placements.iter().map(|p| &p.track_id).collect();
        self.tracks
            .values()
            .filter(|t| match filter {
                TrackFilter::All => true,
                TrackFilter::Added => added.contains(&t.id),
                TrackFilter::GoodFit => t.good_fit(),
            })
            .filter(|t| match &query {
                None => true,
                Some(q) => {
                    t.title.to_lowercase().contains(q)
                        || t.full_prompt.to_lowercase().contains(q)
                        || t.analysis.as_ref().is_some_and(|a| {
                            a.tags.iter().any(|tag| tag.label.to_lowercase().contains(q))
                        })
                }
            })
            .collect()
    }

    /// Tracks of the current placements, each once, in placement order.
    pub fn saved_track_ids(&self) -> Vec<TrackId> {
        let mut seen = HashSet::new();
        self.placements
            .iter()
            .filter(|p| seen.insert(&p.track_id))
            .map(|p| p.track_id.clone())
            .collect()
    }

    pub fn recompute_taste(&mut self) {
        let saved: Vec<_> = self
            .saved_track_ids()
            .iter()
            .filter_map(|id| self.tracks.get(id))
            .map(|t| t.embedding.clone())
            .collect();
        let prior = match vecmath::mean_embedding(&saved) {
            Ok(m) => Some(m),
            Err(VecMathError::EmptyInput) => None,
            Err(e) => {
                tracing::warn!("taste prior unavailable: {e}");
                None
            }
        };
        self.taste = TasteProfile {
            saved_embeddings: saved,
            prior,
        };
    }

    /// Active placements ordered by their scene's start time.
    pub fn timeline_path(&self) -> Vec<TrackId> {
        let mut active: Vec<(f64, SceneId, &TrackId)> = self
            .placements
            .iter()
            .filter(|p| p.active)
            .filter_map(|p| {
                self.scene(p.scene_id)
                    .ok()
                    .map(|s| (s.start, s.scene_id, &p.track_id))
            })
            .collect();
        active.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        active.into_iter().map(|(_, _, id)| id.clone()).collect()
    }

    /// Checks every cross-reference invariant; used after loading from disk.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ModelError::Invalid(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        for w in self.scenes.windows(2) {
            if w[1].start < w[0].start {
                return Err(ModelError::Invalid("scenes not ordered by start".into()));
            }
        }
        if let Some(v) = &self.video {
            if !(v.duration > 0.0) {
                return Err(ModelError::Invalid("video duration must be positive".into()));
            }
            if let Some(s) = self.scenes.iter().find(|s| s.start < 0.0 || s.end > v.duration + 1e-6) {
                return Err(ModelError::Invalid(format!("scene {} outside the video", s.scene_id)));
            }
        }
        for (id, t) in &self.tracks {
            if id != &t.id {
                return Err(ModelError::Invalid(format!("track key {id} != id {}", t.id)));
            }
            t.check().map_err(|reason| ModelError::InvalidLineage {
                track: id.clone(),
                reason,
            })?;
        }
        if !self.lineage_is_acyclic() {
            return Err(ModelError::Invalid("lineage graph has a cycle".into()));
        }
        for p in &self.placements {
            self.scene(p.scene_id)?;
            self.track(&p.track_id)?;
        }
        for s in &self.scenes {
            let mut idx: Vec<(usize, bool)> = self
                .placements
                .iter()
                .filter(|p| p.scene_id == s.scene_id)
                .map(|p| (p.alternative_index, p.active))
                .collect();
            idx.sort();
            let contiguous = idx.iter().enumerate().all(|(i, (a, _))| i == *a);
            let active = idx.iter().filter(|(_, a)| *a).count();
            if !contiguous || (!idx.is_empty() && active != 1) {
                return Err(ModelError::Invalid(format!(
                    "placements of scene {} are not 0..k with one active",
                    s.scene_id
                )));
            }
        }
        Ok(())
    }
}
