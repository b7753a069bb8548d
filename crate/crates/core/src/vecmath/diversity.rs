use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans2_with, KMeansConfig};
use super::{Embedding, Result, VecMathError};
use crate::scalar::Scalar;

/// Value returned by [`cluster_separation`] when both clusters collapse to
/// points (zero within-cluster dispersion) but are apart from each other.
pub const DEFAULT_SEPARATION_CAP: f64 = 1.0e6;

/// Cosine of the angle between `a` and `b`, clamped to `[-1, 1]`.
pub fn cosine_similarity<T: Scalar>(a: &Embedding<T>, b: &Embedding<T>) -> Result<f64> {
    a.check_same_dim(b)?;
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.values().iter().zip(b.values()) {
        let (x, y) = (x.as_f64(), y.as_f64());
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(VecMathError::Degenerate("zero-norm vector"));
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Component-wise mean of `set`, L2-normalized.
pub fn mean_embedding<T: Scalar>(set: &[Embedding<T>]) -> Result<Embedding<T>> {
    let first = set.first().ok_or(VecMathError::EmptyInput)?;
    let mut sum = vec![0.0f64; first.dim()];
    for e in set {
        first.check_same_dim(e)?;
        for (acc, v) in sum.iter_mut().zip(e.values()) {
            *acc += v.as_f64();
        }
    }
    let n = set.len() as f64;
    let mean: Vec<f64> = sum.into_iter().map(|s| s / n).collect();
    let norm = mean.iter().map(|m| m * m).sum::<f64>().sqrt();
    if norm <= f64::EPSILON * n {
        return Err(VecMathError::Degenerate("mean vector is zero"));
    }
    Embedding::from_f64(&mean.iter().map(|m| m / norm).collect::<Vec<_>>())
}

/// Mean of `1 - cos` over all unordered pairs.
pub fn mean_pairwise_cosine_distance<T: Scalar>(set: &[Embedding<T>]) -> Result<f64> {
    if set.len() < 2 {
        return Err(VecMathError::InsufficientData {
            needed: 2,
            got: set.len(),
        });
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (i, a) in set.iter().enumerate() {
        for b in &set[i + 1..] {
            total += 1.0 - cosine_similarity(a, b)?;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

/// Calinski–Harabasz index of the best 2-means partition of `set`.
pub fn cluster_separation<T: Scalar>(set: &[Embedding<T>], seed: u64) -> Result<f64> {
    cluster_separation_with(set, &KMeansConfig::seeded(seed), DEFAULT_SEPARATION_CAP)
}

pub fn cluster_separation_with<T: Scalar>(
    set: &[Embedding<T>],
    config: &KMeansConfig,
    cap: f64,
) -> Result<f64> {
    let fit = kmeans2_with(set, config)?;
    calinski_harabasz(fit.between_dispersion, fit.within_dispersion, set.len(), cap)
}

pub(crate) fn calinski_harabasz(between: f64, within: f64, n: usize, cap: f64) -> Result<f64> {
    const K: f64 = 2.0;
    if within <= 0.0 {
        if between > 0.0 {
            return Ok(cap);
        }
        return Err(VecMathError::Degenerate("zero between and within dispersion"));
    }
    Ok(((between / (K - 1.0)) / (within / (n as f64 - K))).min(cap))
}

/// Both set-diversity statistics for one group of embeddings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub mean_pairwise_cosine_distance: f64,
    pub cluster_separation: f64,
    pub n: usize,
}

pub fn diversity_report<T: Scalar>(set: &[Embedding<T>], seed: u64) -> Result<DiversityReport> {
    if set.len() < 3 {
        return Err(VecMathError::InsufficientData {
            needed: 3,
            got: set.len(),
        });
    }
    Ok(DiversityReport {
        mean_pairwise_cosine_distance: mean_pairwise_cosine_distance(set)?,
        cluster_separation: cluster_separation(set, seed)?,
        n: set.len(),
    })
}
