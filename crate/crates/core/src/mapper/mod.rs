//! Music map: 2-D t-SNE layouts of track embeddings, aligned across updates.

mod procrustes;
pub mod tsne;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::TrackId;
use crate::scalar::Scalar;
use crate::vecmath::{cosine_similarity, Embedding, VecMathError};

pub use procrustes::{fit as procrustes_fit, sum_sq_displacement, RigidTransform};
pub use tsne::{effective_perplexity, joint_probabilities, kl_divergence, low_dim_affinities, tsne_gradient};

/// Below this many points a fixed circular layout is used.
pub const MIN_TSNE_POINTS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("track not in layout: {0}")]
    NotFound(TrackId),
    #[error("duplicate track id {0}")]
    DuplicateId(TrackId),
    #[error(transparent)]
    Embedding(#[from] VecMathError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch_iteration: usize,
    pub seed: u64,
    /// Perplexity after lowering for small point sets; filled in by [`project`].
    #[serde(default)]
    pub effective_perplexity: Option<f64>,
}

impl Default for TsneParams {
    fn default() -> Self {
        Self {
            perplexity: 5.0,
            iterations: 500,
            learning_rate: 100.0,
            early_exaggeration: 4.0,
            exaggeration_iterations: 100,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch_iteration: 250,
            seed: 0,
            effective_perplexity: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct MapLayout<T: Scalar = f64> {
    pub points: BTreeMap<TrackId, (T, T)>,
    pub params: TsneParams,
    pub path: Vec<TrackId>,
    pub kl_final: f64,
    pub layout_version: u64,
}

/// Layout plus the KL trace of the optimization that produced it.
#[derive(Clone, Debug)]
pub struct Projection<T: Scalar> {
    pub layout: MapLayout<T>,
    pub kl_trace: Vec<f64>,
}

fn point_key(seed: u64, id: &TrackId) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_str().as_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

fn sorted_items<T: Scalar>(
    items: &[(TrackId, Embedding<T>)],
) -> Result<Vec<&(TrackId, Embedding<T>)>, MapError> {
    let mut sorted: Vec<_> = items.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    for w in sorted.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(MapError::DuplicateId(w[0].0.clone()));
        }
    }
    Ok(sorted)
}

fn circular_layout<T: Scalar>(ids: &[&TrackId]) -> BTreeMap<TrackId, (T, T)> {
    let n = ids.len();
    ids.iter()
        .enumerate()
        .map(|(k, id)| {
            let (x, y) = if n == 1 {
                (0.0, 0.0)
            } else {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                (a.cos(), a.sin())
            };
            ((*id).clone(), (T::from_f64_lossy(x), T::from_f64_lossy(y)))
        })
        .collect()
}

/// Projects embeddings to 2-D. Points are processed in id order, and each
/// point's starting position depends only on `(seed, id)`, so the result does
/// not depend on input order.
pub fn project<T: Scalar>(
    items: &[(TrackId, Embedding<T>)],
    params: &TsneParams,
    path: &[TrackId],
) -> Result<Projection<T>, MapError> {
    let sorted = sorted_items(items)?;
    let n = sorted.len();
    let ids: Vec<&TrackId> = sorted.iter().map(|(id, _)| id).collect();
    let path: Vec<TrackId> = path
        .iter()
        .filter(|id| ids.contains(id))
        .cloned()
        .collect();
    if n < MIN_TSNE_POINTS {
        return Ok(Projection {
            layout: MapLayout {
                points: circular_layout(&ids),
                params: params.clone(),
                path,
                kl_final: 0.0,
                layout_version: 1,
            },
            kl_trace: Vec::new(),
        });
    }
    let mut sq = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = 2.0 * (1.0 - cosine_similarity(&sorted[i].1, &sorted[j].1)?);
            let d = d.max(0.0);
            sq[i * n + j] = d;
            sq[j * n + i] = d;
        }
    }
    if sq.iter().all(|&d| d <= 1e-15) {
        return Err(MapError::Degenerate("all embeddings identical"));
    }
    let perplexity = effective_perplexity(params.perplexity, n);
    let p: Vec<T> = joint_probabilities(&sq, n, perplexity);
    let keys: Vec<u64> = ids.iter().map(|id| point_key(params.seed, id)).collect();
    let run = tsne::optimize(&p, tsne::initial_layout(&keys), params);
    let kl_final = run.kl_trace.last().copied().unwrap_or(0.0);
    let mut used = params.clone();
    used.effective_perplexity = Some(perplexity);
    Ok(Projection {
        layout: MapLayout {
            points: ids
                .iter()
                .zip(&run.y)
                .map(|(id, p)| ((*id).clone(), (p[0], p[1])))
                .collect(),
            params: used,
            path,
            kl_final,
            layout_version: 1,
        },
        kl_trace: run.kl_trace,
    })
}

/// Re-projects with the previous parameters and rigidly aligns the result to
/// the previous layout on the tracks both share.
pub fn update_layout<T: Scalar>(
    previous: &MapLayout<T>,
    items: &[(TrackId, Embedding<T>)],
    path: &[TrackId],
) -> Result<MapLayout<T>, MapError> {
    let mut layout = project(items, &previous.params, path)?.layout;
    let common: Vec<&TrackId> = layout
        .points
        .keys()
        .filter(|id| previous.points.contains_key(*id))
        .collect();
    let to_f64 = |p: &(T, T)| [p.0.as_f64(), p.1.as_f64()];
    let source: Vec<[f64; 2]> = common.iter().map(|id| to_f64(&layout.points[*id])).collect();
    let target: Vec<[f64; 2]> = common.iter().map(|id| to_f64(&previous.points[*id])).collect();
    let transform = procrustes_fit(&source, &target);
    for p in layout.points.values_mut() {
        let q = transform.apply(to_f64(p));
        *p = (T::from_f64_lossy(q[0]), T::from_f64_lossy(q[1]));
    }
    layout.layout_version = previous.layout_version + 1;
    Ok(layout)
}

/// Other tracks within `radius` of `id`, nearest first.
pub fn neighbors<T: Scalar>(
    layout: &MapLayout<T>,
    id: &TrackId,
    radius: f64,
) -> Result<Vec<TrackId>, MapError> {
    let origin = layout
        .points
        .get(id)
        .ok_or_else(|| MapError::NotFound(id.clone()))?;
    let mut found: Vec<(f64, &TrackId)> = layout
        .points
        .iter()
        .filter(|(other, _)| *other != id)
        .map(|(other, p)| {
            let dx = (p.0 - origin.0).as_f64();
            let dy = (p.1 - origin.1).as_f64();
            (dx.hypot(dy), other)
        })
        .filter(|(d, _)| *d <= radius && radius > 0.0)
        .collect();
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
    Ok(found.into_iter().map(|(_, id)| id.clone()).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportPoint {
    pub id: TrackId,
    pub x: f64,
    pub y: f64,
}

/// Display form of a layout: coordinates scaled uniformly into the unit square.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutExport {
    pub layout_version: u64,
    pub params: TsneParams,
    pub points: Vec<ExportPoint>,
    pub path: Vec<TrackId>,
}

impl<T: Scalar> MapLayout<T> {
    pub fn export(&self) -> LayoutExport {
        let raw: Vec<(&TrackId, f64, f64)> = self
            .points
            .iter()
            .map(|(id, p)| (id, p.0.as_f64(), p.1.as_f64()))
            .collect();
        let fold = |f: fn(f64, f64) -> f64, init: f64, sel: fn(&(&TrackId, f64, f64)) -> f64| {
            raw.iter().map(sel).fold(init, f)
        };
        let (min_x, max_x) = (fold(f64::min, f64::INFINITY, |p| p.1), fold(f64::max, f64::NEG_INFINITY, |p| p.1));
        let (min_y, max_y) = (fold(f64::min, f64::INFINITY, |p| p.2), fold(f64::max, f64::NEG_INFINITY, |p| p.2));
        let span = (max_x - min_x).max(max_y - min_y);
        let points = raw
            .iter()
            .map(|(id, x, y)| {
                let (x, y) = if span > 0.0 {
                    ((x - min_x) / span, (y - min_y) / span)
                } else {
                    (0.5, 0.5)
                };
                ExportPoint {
                    id: (*id).clone(),
                    x,
                    y,
                }
            })
            .collect();
        LayoutExport {
            layout_version: self.layout_version,
            params: self.params.clone(),
            points,
            path: self.path.clone(),
        }
    }
}
