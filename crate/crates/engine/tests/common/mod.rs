#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use soundstage_core::model::{KeywordPools, SceneSegment};
use soundstage_core::vecmath::EMBEDDING_DIM;
use soundstage_core::Embedding;

pub fn pools() -> KeywordPools {
    let five = |p: &str| (1..=5).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    KeywordPools::new(five("genre"), five("instrument"), five("mood"), five("energy"))
}

pub fn scene(id: u32, start: f64, end: f64, vibe: Embedding) -> SceneSegment {
    SceneSegment {
        scene_id: id,
        start,
        end,
        description: format!("scene {id}"),
        vibe: format!("vibe {id}"),
        vibe_embedding: vibe,
        keyword_pools: pools(),
    }
}

pub fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let (u1, u2): (f64, f64) = (rng.random::<f64>().max(1e-12), rng.random());
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        })
        .collect()
}

pub fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// `n` orthonormal vectors by Gram-Schmidt.
pub fn orthonormal(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    while out.len() < n {
        let mut v = gaussian(rng, EMBEDDING_DIM);
        for b in &out {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        normalize(&mut v);
        out.push(v);
    }
    out
}

pub fn emb(v: &[f64]) -> Embedding {
    Embedding::from_f64(v).unwrap()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Cosine by an explicit loop over f64-widened components.
pub fn oracle_cos(a: &Embedding, b: &Embedding) -> f64 {
    let (a, b) = (a.to_f64(), b.to_f64());
    dot(&a, &b) / (dot(&a, &a).sqrt() * dot(&b, &b).sqrt())
}
