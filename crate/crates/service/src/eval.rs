//! Set-diversity statistics over labelled groups of embedding sets.
//!
//! A group is a directory. Each `*.emb` or `*.json` file in it is one set of
//! embeddings; each subdirectory holding `*.wav` files is one set, embedded
//! with the configured audio embedder.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use soundstage_core::vecmath::{cluster_separation, embfile, mean_pairwise_cosine_distance};
use soundstage_core::Embedding;
use soundstage_providers::Providers;

use crate::error::{Result, ServiceError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    /// Sample standard deviation; zero for a single set.
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, sd }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetStats {
    pub name: String,
    pub n: usize,
    pub pairwise_cosine_distance: f64,
    pub cluster_separation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub group: String,
    pub sets: Vec<SetStats>,
    pub pairwise_cosine_distance: MeanSd,
    pub cluster_separation: MeanSd,
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| ServiceError::BadRequest(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    Ok(entries)
}

fn has_ext(p: &Path, exts: &[&str]) -> bool {
    p.extension().and_then(|e| e.to_str()).is_some_and(|e| exts.contains(&e))
}

async fn load_sets(dir: &Path, providers: &Providers) -> Result<Vec<(String, Vec<Embedding>)>> {
    let mut sets = Vec::new();
    for path in sorted_entries(dir)? {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if path.is_dir() {
            let wavs: Vec<PathBuf> = sorted_entries(&path)?.into_iter().filter(|p| has_ext(p, &["wav"])).collect();
            if wavs.is_empty() {
                continue;
            }
            let mut set = Vec::with_capacity(wavs.len());
            for w in wavs {
                let bytes = std::fs::read(&w)?;
                set.push(
                    providers
                        .embedder
                        .embed_audio(&bytes)
                        .await
                        .map_err(|e| ServiceError::Engine(e.into()))?,
                );
            }
            sets.push((name, set));
        } else if has_ext(&path, &["emb", "json"]) {
            let set = embfile::read(&path).map_err(|e| ServiceError::BadRequest(format!("{}: {e}", path.display())))?;
            sets.push((name, set));
        }
    }
    Ok(sets)
}

/// Statistics for each group under `root`, in the order given.
pub async fn evaluate(root: &Path, groups: &[String], seed: u64, providers: &Providers) -> Result<Vec<GroupStats>> {
    let mut out = Vec::with_capacity(groups.len());
    for g in groups {
        let dir = root.join(g);
        if !dir.is_dir() {
            return Err(ServiceError::BadRequest(format!("group directory {} not found", dir.display())));
        }
        let sets = load_sets(&dir, providers).await?;
        if sets.is_empty() {
            return Err(ServiceError::BadRequest(format!("group {g} has no embedding sets")));
        }
        let mut stats = Vec::with_capacity(sets.len());
        for (name, set) in sets {
            let err = |e: soundstage_core::vecmath::VecMathError| {
                ServiceError::BadRequest(format!("{g}/{name}: {e}"))
            };
            stats.push(SetStats {
                n: set.len(),
                pairwise_cosine_distance: mean_pairwise_cosine_distance(&set).map_err(err)?,
                cluster_separation: cluster_separation(&set, seed).map_err(err)?,
                name,
            });
        }
        let pcd: Vec<f64> = stats.iter().map(|s| s.pairwise_cosine_distance).collect();
        let cs: Vec<f64> = stats.iter().map(|s| s.cluster_separation).collect();
        out.push(GroupStats {
            group: g.clone(),
            pairwise_cosine_distance: MeanSd::of(&pcd),
            cluster_separation: MeanSd::of(&cs),
            sets: stats,
        });
    }
    Ok(out)
}

/// Plain-text table, one row per group.
pub fn table(stats: &[GroupStats]) -> String {
    let width = stats.iter().map(|s| s.group.len()).max().unwrap_or(5).max(5);
    let mut out = format!(
        "{:<width$}  {:>4}  {:>26}  {:>30}\n",
        "group", "sets", "pairwise cosine distance", "cluster separation (CH, k=2)"
    );
    for s in stats {
        out.push_str(&format!(
            "{:<width$}  {:>4}  {:>12.6} ({:>11.6})  {:>14.4} ({:>13.4})\n",
            s.group,
            s.sets.len(),
            s.pairwise_cosine_distance.mean,
            s.pairwise_cosine_distance.sd,
            s.cluster_separation.mean,
            s.cluster_separation.sd,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_sd_values() {
        let m = MeanSd::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(MeanSd::of(&[7.0]), MeanSd { mean: 7.0, sd: 0.0 });
    }
}
