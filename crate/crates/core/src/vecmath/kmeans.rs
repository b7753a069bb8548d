use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Embedding, Result, VecMathError};
use crate::scalar::Scalar;

/// Seeded two-means configuration. Restart `r` uses seed `seed + r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
}

impl KMeansConfig {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 8,
            max_iterations: 100,
        }
    }
}

/// One Lloyd descent from a single k-means++ initialization.
#[derive(Clone, Debug, PartialEq)]
pub struct LloydRun {
    pub labels: Vec<usize>,
    pub centroids: [Vec<f64>; 2],
    pub within_dispersion: f64,
    /// Within-cluster sum of squares after every assignment step; the last
    /// entry is the objective of the returned partition.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Best two-means partition over all restarts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeans2 {
    pub labels: Vec<usize>,
    pub centroids: [Vec<f64>; 2],
    pub within_dispersion: f64,
    pub between_dispersion: f64,
    pub seed: u64,
}

pub fn kmeans2<T: Scalar>(set: &[Embedding<T>], seed: u64) -> Result<KMeans2> {
    kmeans2_with(set, &KMeansConfig::seeded(seed))
}

pub fn kmeans2_with<T: Scalar>(set: &[Embedding<T>], config: &KMeansConfig) -> Result<KMeans2> {
    let points = to_points(set)?;
    let mut best: Option<(u64, LloydRun)> = None;
    for r in 0..config.restarts.max(1) {
        let seed = config.seed.wrapping_add(r as u64);
        let run = lloyd(&points, seed, config.max_iterations)?;
        let better = match &best {
            None => true,
            Some((_, b)) => run.within_dispersion < b.within_dispersion,
        };
        if better {
            best = Some((seed, run));
        }
    }
    let (seed, run) = best.expect("at least one restart");
    let between_dispersion = between(&points, &run.labels, &run.centroids);
    Ok(KMeans2 {
        labels: run.labels,
        centroids: run.centroids,
        within_dispersion: run.within_dispersion,
        between_dispersion,
        seed,
    })
}

/// A single seeded Lloyd run; exposed so callers can inspect the objective trace.
pub fn lloyd_run<T: Scalar>(
    set: &[Embedding<T>],
    seed: u64,
    max_iterations: usize,
) -> Result<LloydRun> {
    lloyd(&to_points(set)?, seed, max_iterations)
}

fn to_points<T: Scalar>(set: &[Embedding<T>]) -> Result<Vec<Vec<f64>>> {
    if set.len() < 3 {
        return Err(VecMathError::InsufficientData {
            needed: 3,
            got: set.len(),
        });
    }
    for e in &set[1..] {
        set[0].check_same_dim(e)?;
    }
    Ok(set.iter().map(Embedding::to_f64).collect())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lloyd(points: &[Vec<f64>], seed: u64, max_iterations: usize) -> Result<LloydRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, &mut rng)?;
    let mut labels: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..max_iterations.max(1) {
        iterations += 1;
        let mut next = assign(points, &centroids);
        repair_empty(points, &mut next, &mut centroids);
        trace.push(within(points, &next, &centroids));
        let stable = next == labels;
        labels = next;
        if stable {
            converged = true;
            break;
        }
        centroids = means(points, &labels, &centroids);
    }
    let mut centroids = means(points, &labels, &centroids);
    if hartigan(points, &mut labels, &mut centroids) {
        trace.push(within(points, &labels, &centroids));
    }
    let w = within(points, &labels, &centroids);
    trace.push(w);
    Ok(LloydRun {
        labels,
        centroids,
        within_dispersion: w,
        objective_trace: trace,
        iterations,
        converged,
    })
}

fn plus_plus_init(points: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Result<[Vec<f64>; 2]> {
    let first = rng.random_range(0..points.len());
    let weights: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    if weights.iter().all(|&w| w == 0.0) {
        return Err(VecMathError::Degenerate("all points identical"));
    }
    let second = WeightedIndex::new(&weights)
        .map_err(|_| VecMathError::Degenerate("invalid k-means++ weights"))?
        .sample(rng);
    Ok([points[first].clone(), points[second].clone()])
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>; 2]) -> Vec<usize> {
    points
        .iter()
        .map(|p| usize::from(sq_dist(p, &centroids[1]) < sq_dist(p, &centroids[0])))
        .collect()
}

// An emptied cluster takes over the point farthest from its own centroid.
fn repair_empty(points: &[Vec<f64>], labels: &mut [usize], centroids: &mut [Vec<f64>; 2]) {
    for empty in 0..2 {
        if labels.iter().any(|&l| l == empty) {
            continue;
        }
        let far = (0..points.len())
            .max_by(|&a, &b| {
                let da = sq_dist(&points[a], &centroids[labels[a]]);
                let db = sq_dist(&points[b], &centroids[labels[b]]);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("non-empty point set");
        labels[far] = empty;
        centroids[empty] = points[far].clone();
    }
}

fn means(points: &[Vec<f64>], labels: &[usize], previous: &[Vec<f64>; 2]) -> [Vec<f64>; 2] {
    let dim = points[0].len();
    let mut sums = [vec![0.0; dim], vec![0.0; dim]];
    let mut counts = [0usize; 2];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    let mut out = previous.clone();
    for k in 0..2 {
        if counts[k] > 0 {
            out[k] = sums[k].iter().map(|s| s / counts[k] as f64).collect();
        }
    }
    out
}

/// Single-point transfers that lower the objective once centroids move with
/// the point. Returns whether anything moved.
fn hartigan(points: &[Vec<f64>], labels: &mut [usize], centroids: &mut [Vec<f64>; 2]) -> bool {
    let mut counts = [0usize; 2];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    let mut moved_any = false;
    loop {
        let mut moved = false;
        for i in 0..points.len() {
            let from = labels[i];
            let to = 1 - from;
            if counts[from] < 2 {
                continue;
            }
            let (nf, nt) = (counts[from] as f64, counts[to] as f64);
            let gain = nf / (nf - 1.0) * sq_dist(&points[i], &centroids[from]);
            let cost = nt / (nt + 1.0) * sq_dist(&points[i], &centroids[to]);
            if cost < gain * (1.0 - 1e-12) {
                let p = &points[i];
                for (c, v) in centroids[from].iter_mut().zip(p) {
                    *c = (*c * nf - v) / (nf - 1.0);
                }
                for (c, v) in centroids[to].iter_mut().zip(p) {
                    *c = (*c * nt + v) / (nt + 1.0);
                }
                counts[from] -= 1;
                counts[to] += 1;
                labels[i] = to;
                moved = true;
                moved_any = true;
            }
        }
        if !moved {
            break;
        }
    }
    if moved_any {
        *centroids = means(points, labels, centroids);
    }
    moved_any
}

fn within(points: &[Vec<f64>], labels: &[usize], centroids: &[Vec<f64>; 2]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l]))
        .sum()
}

fn between(points: &[Vec<f64>], labels: &[usize], centroids: &[Vec<f64>; 2]) -> f64 {
    let n = points.len() as f64;
    let dim = points[0].len();
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v / n;
        }
    }
    (0..2)
        .map(|k| {
            let size = labels.iter().filter(|&&l| l == k).count() as f64;
            size * sq_dist(&centroids[k], &mean)
        })
        .sum()
}
