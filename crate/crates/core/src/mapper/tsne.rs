//! Exact t-SNE on small point sets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::TsneParams;
use crate::scalar::Scalar;

pub const ENTROPY_TOLERANCE: f64 = 1e-5;
pub const MAX_BISECTION_STEPS: usize = 50;
const MIN_GAIN: f64 = 0.01;
const INIT_STD: f64 = 1e-4;

/// Perplexity actually used for `n` points: values at or above `(n-1)/3` are
/// lowered to `floor((n-1)/3)`, but never below 2.
pub fn effective_perplexity(requested: f64, n: usize) -> f64 {
    let limit = (n.saturating_sub(1)) as f64 / 3.0;
    if requested < limit {
        requested
    } else {
        limit.floor().max(2.0)
    }
}

/// Conditional affinities of one row, with the Gaussian precision found by
/// bisection so that the row entropy matches `ln(perplexity)`.
fn conditional_row(sq_dist: &[f64], self_index: usize, perplexity: f64) -> Vec<f64> {
    let target = perplexity.ln();
    let (mut beta, mut lo, mut hi) = (1.0f64, f64::NEG_INFINITY, f64::INFINITY);
    let mut row = vec![0.0; sq_dist.len()];
    for _ in 0..MAX_BISECTION_STEPS {
        // Shift by the smallest off-diagonal distance for numerical range.
        let min_d = sq_dist
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != self_index)
            .map(|(_, d)| *d)
            .fold(f64::INFINITY, f64::min);
        let mut sum = 0.0;
        let mut weighted = 0.0;
        for (j, &d) in sq_dist.iter().enumerate() {
            row[j] = if j == self_index {
                0.0
            } else {
                (-(d - min_d) * beta).exp()
            };
            sum += row[j];
            weighted += (d - min_d) * row[j];
        }
        let entropy = sum.ln() + beta * weighted / sum;
        for v in row.iter_mut() {
            *v /= sum;
        }
        let diff = entropy - target;
        if diff.abs() < ENTROPY_TOLERANCE {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = if lo.is_finite() { (beta + lo) / 2.0 } else { beta / 2.0 };
        }
    }
    row
}

/// Symmetric joint affinities `(p_j|i + p_i|j) / 2n` from a squared-distance
/// matrix (row-major, `n x n`).
pub fn joint_probabilities<T: Scalar>(sq_dist: &[f64], n: usize, perplexity: f64) -> Vec<T> {
    assert_eq!(sq_dist.len(), n * n);
    let mut cond = vec![0.0f64; n * n];
    for i in 0..n {
        let row = conditional_row(&sq_dist[i * n..(i + 1) * n], i, perplexity);
        cond[i * n..(i + 1) * n].copy_from_slice(&row);
    }
    let mut p = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = (cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64);
                p[i * n + j] = T::from_f64_lossy(v.max(1e-300));
            }
        }
    }
    p
}

fn student_kernel<T: Scalar>(y: &[[T; 2]]) -> (Vec<f64>, f64) {
    let n = y.len();
    let mut num = vec![0.0f64; n * n];
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = (y[i][0] - y[j][0]).as_f64();
            let dy = (y[i][1] - y[j][1]).as_f64();
            let k = 1.0 / (1.0 + dx * dx + dy * dy);
            num[i * n + j] = k;
            num[j * n + i] = k;
            sum += 2.0 * k;
        }
    }
    (num, sum)
}

/// Low-dimensional affinities `q_ij` for layout `y`.
pub fn low_dim_affinities<T: Scalar>(y: &[[T; 2]]) -> Vec<T> {
    let (num, sum) = student_kernel(y);
    num.into_iter().map(|k| T::from_f64_lossy(k / sum)).collect()
}

/// Gradient of `KL(P || Q(y))` with respect to every layout point.
pub fn tsne_gradient<T: Scalar>(p: &[T], y: &[[T; 2]]) -> Vec<[T; 2]> {
    let n = y.len();
    assert_eq!(p.len(), n * n);
    let (num, sum) = student_kernel(y);
    (0..n)
        .map(|i| {
            let (mut gx, mut gy) = (0.0f64, 0.0f64);
            for j in 0..n {
                if i == j {
                    continue;
                }
                let k = num[i * n + j];
                let m = (p[i * n + j].as_f64() - k / sum) * k;
                gx += m * (y[i][0] - y[j][0]).as_f64();
                gy += m * (y[i][1] - y[j][1]).as_f64();
            }
            [T::from_f64_lossy(4.0 * gx), T::from_f64_lossy(4.0 * gy)]
        })
        .collect()
}

/// `KL(P || Q(y))`, skipping zero entries of `P`.
pub fn kl_divergence<T: Scalar>(p: &[T], y: &[[T; 2]]) -> f64 {
    let n = y.len();
    let (num, sum) = student_kernel(y);
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pij = p[i * n + j].as_f64();
            if i != j && pij > 0.0 {
                let q = (num[i * n + j] / sum).max(1e-300);
                kl += pij * (pij / q).ln();
            }
        }
    }
    kl
}

/// Result of one gradient-descent run.
#[derive(Clone, Debug)]
pub struct TsneRun<T: Scalar> {
    pub y: Vec<[T; 2]>,
    /// KL divergence against the unexaggerated `P` after each iteration.
    pub kl_trace: Vec<f64>,
}

/// Small Gaussian starting positions, one independent stream per point key.
pub fn initial_layout<T: Scalar>(keys: &[u64]) -> Vec<[T; 2]> {
    let normal = Normal::new(0.0, INIT_STD).expect("valid std");
    keys.iter()
        .map(|&k| {
            let mut rng = ChaCha8Rng::seed_from_u64(k);
            [
                T::from_f64_lossy(normal.sample(&mut rng)),
                T::from_f64_lossy(normal.sample(&mut rng)),
            ]
        })
        .collect()
}

/// Momentum gradient descent with per-coordinate gains and early exaggeration.
pub fn optimize<T: Scalar>(p: &[T], mut y: Vec<[T; 2]>, params: &TsneParams) -> TsneRun<T> {
    let n = y.len();
    let mut update = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut kl_trace = Vec::with_capacity(params.iterations);
    let exaggerated: Vec<T> = p
        .iter()
        .map(|v| *v * T::from_f64_lossy(params.early_exaggeration))
        .collect();
    for iter in 0..params.iterations {
        let target = if iter < params.exaggeration_iterations {
            &exaggerated
        } else {
            p
        };
        let momentum = if iter < params.momentum_switch_iteration {
            params.initial_momentum
        } else {
            params.final_momentum
        };
        let grad = tsne_gradient(target, &y);
        for i in 0..n {
            for d in 0..2 {
                let g = grad[i][d].as_f64();
                gains[i][d] = if (g > 0.0) != (update[i][d] > 0.0) {
                    gains[i][d] + 0.2
                } else {
                    (gains[i][d] * 0.8).max(MIN_GAIN)
                };
                update[i][d] = momentum * update[i][d] - params.learning_rate * gains[i][d] * g;
                y[i][d] = y[i][d] + T::from_f64_lossy(update[i][d]);
            }
        }
        recenter(&mut y);
        kl_trace.push(kl_divergence(p, &y));
    }
    TsneRun { y, kl_trace }
}

fn recenter<T: Scalar>(y: &mut [[T; 2]]) {
    if y.is_empty() {
        return;
    }
    let n = y.len() as f64;
    let mx = y.iter().map(|p| p[0].as_f64()).sum::<f64>() / n;
    let my = y.iter().map(|p| p[1].as_f64()).sum::<f64>() / n;
    for p in y.iter_mut() {
        p[0] = p[0] - T::from_f64_lossy(mx);
        p[1] = p[1] - T::from_f64_lossy(my);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_entropy(row: &[f64]) -> f64 {
        -row.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }

    #[test]
    fn bisection_hits_target_perplexity() {
        let d = [0.0, 0.1, 0.5, 0.9, 1.3, 2.0, 2.2, 3.5];
        let row = conditional_row(&d, 0, 3.0);
        assert!((row_entropy(&row) - 3.0f64.ln()).abs() < 1e-4);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn joint_p_is_symmetric_and_normalized() {
        let n = 5;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = ((i as f64) - (j as f64)).powi(2) * 0.1;
            }
        }
        let p: Vec<f64> = joint_probabilities(&d, n, 2.0);
        let total: f64 = p.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for i in 0..n {
            assert_eq!(p[i * n + i], 0.0);
            for j in 0..n {
                assert_eq!(p[i * n + j], p[j * n + i]);
            }
        }
    }

    #[test]
    fn perplexity_is_lowered_for_small_sets() {
        assert_eq!(effective_perplexity(5.0, 100), 5.0);
        assert_eq!(effective_perplexity(5.0, 10), 3.0);
        assert_eq!(effective_perplexity(5.0, 4), 2.0);
    }
}
