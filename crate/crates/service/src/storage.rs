//! Project files and assets under one data directory.
//!
//! ```text
//! <data_dir>/projects/<project-id>.json
//! <data_dir>/projects/<project-id>.map.json
//! <data_dir>/assets/<sha256>.<ext>
//! ```

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use soundstage_core::assets::{atomic_write, AssetStore};
use soundstage_core::model::{Project, ProjectId, TrackId};
use soundstage_core::MapLayout;

use crate::error::{Result, ServiceError};

#[derive(Clone)]
pub struct Storage {
    root: PathBuf,
    assets: AssetStore,
    locks: Arc<Mutex<HashMap<ProjectId, Arc<tokio::sync::Mutex<()>>>>>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl Storage {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(root.join("projects"))?;
        let assets = AssetStore::open(root.join("assets"))?;
        Ok(Self { root, assets, locks: Arc::default() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn assets(&self) -> &AssetStore {
        &self.assets
    }

    fn file(&self, id: &ProjectId, suffix: &str) -> Result<PathBuf> {
        if !valid_id(id.as_str()) {
            return Err(ServiceError::not_found("project", id));
        }
        Ok(self.root.join("projects").join(format!("{id}{suffix}")))
    }

    pub fn project_path(&self, id: &ProjectId) -> Result<PathBuf> {
        self.file(id, ".json")
    }

    /// Serializes writers of one project. Hold the guard across load, change and save.
    pub async fn lock(&self, id: &ProjectId) -> tokio::sync::OwnedMutexGuard<()> {
        let m = {
            let mut locks = self.locks.lock().expect("lock table poisoned");
            locks.entry(id.clone()).or_default().clone()
        };
        m.lock_owned().await
    }

    pub fn save(&self, project: &Project) -> Result<()> {
        project.validate()?;
        let body = serde_json::to_vec_pretty(project).map_err(|e| ServiceError::Storage(e.to_string()))?;
        atomic_write(&self.project_path(&project.id)?, &body)?;
        Ok(())
    }

    pub fn load(&self, id: &ProjectId) -> Result<Project> {
        let path = self.project_path(id)?;
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(ServiceError::not_found("project", id)),
            Err(e) => return Err(e.into()),
        };
        let project: Project = serde_json::from_slice(&bytes)
            .map_err(|e| ServiceError::Storage(format!("{}: {e}", path.display())))?;
        project.validate()?;
        Ok(project)
    }

    pub fn exists(&self, id: &ProjectId) -> bool {
        self.project_path(id).map(|p| p.exists()).unwrap_or(false)
    }

    pub fn project_ids(&self) -> Result<Vec<ProjectId>> {
        let mut ids: Vec<ProjectId> = std::fs::read_dir(self.root.join("projects"))?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter_map(|n| n.strip_suffix(".json").map(str::to_string))
            .filter(|n| valid_id(n))
            .map(ProjectId::new)
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// The project holding `track`.
    pub fn find_track(&self, track: &TrackId) -> Result<ProjectId> {
        for id in self.project_ids()? {
            if self.load(&id)?.tracks.contains_key(track) {
                return Ok(id);
            }
        }
        Err(ServiceError::not_found("track", track))
    }

    pub fn load_map(&self, id: &ProjectId) -> Result<Option<CachedMap>> {
        match std::fs::read(self.file(id, ".map.json")?) {
            Ok(b) => Ok(serde_json::from_slice(&b).ok()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save_map(&self, id: &ProjectId, map: &CachedMap) -> Result<()> {
        let body = serde_json::to_vec(map).map_err(|e| ServiceError::Storage(e.to_string()))?;
        atomic_write(&self.file(id, ".map.json")?, &body)?;
        Ok(())
    }
}

/// A layout together with the inputs it was computed from.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CachedMap {
    pub fingerprint: String,
    pub layout: MapLayout,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_missing() {
        let dir = tempfile::tempdir().unwrap();
        let s = Storage::open(dir.path()).unwrap();
        let p = Project::new(ProjectId::new("p1"), "t", "vlog", "friends", "upbeat");
        s.save(&p).unwrap();
        assert_eq!(s.load(&p.id).unwrap(), p);
        assert_eq!(s.project_ids().unwrap(), vec![p.id.clone()]);
        assert!(matches!(s.load(&ProjectId::new("nope")), Err(ServiceError::NotFound { .. })));
        assert!(matches!(s.load(&ProjectId::new("../etc")), Err(ServiceError::NotFound { .. })));
    }

    #[test]
    fn corrupt_file_is_a_storage_error() {
        let dir = tempfile::tempdir().unwrap();
        let s = Storage::open(dir.path()).unwrap();
        std::fs::write(dir.path().join("projects/bad.json"), b"{").unwrap();
        assert!(matches!(s.load(&ProjectId::new("bad")), Err(ServiceError::Storage(_))));
    }
}
