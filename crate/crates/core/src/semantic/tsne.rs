//! Exact (O(n^2)) t-SNE.
//!
//! The corpus this projects is a few hundred instrument items, so the exact
//! algorithm is cheap and avoids the nondeterminism of tree approximations.
//! Per-point bandwidths are found by binary search until the achieved
//! perplexity matches the target within `PERPLEXITY_TOL`; the embedding is
//! optimized by gradient descent with momentum and early exaggeration over
//! the first quarter of the iterations. The KL divergence against the true
//! (unexaggerated) affinities is recorded every iteration.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float; // sqrt/ln/... in no_std builds

use rand::Rng;
use rand_distr::StandardNormal;

use super::SemanticError;
use crate::linalg::Mat;
use crate::seed::{substream, Stage};

/// Binary-search stopping tolerance on the achieved perplexity itself.
pub const PERPLEXITY_TOL: f64 = 1e-5;
const SEARCH_ITER: usize = 50;
const EXAGGERATION: f64 = 12.0;
const P_MIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    /// Momentum before and after the early-exaggeration phase.
    pub momentum: (f64, f64),
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            learning_rate: 200.0,
            iterations: 1000,
            momentum: (0.5, 0.8),
            seed: 0,
        }
    }
}

impl TsneConfig {
    /// Default config sized to the corpus: perplexity capped below the
    /// feasibility bound and the learning rate from the usual
    /// `max(n / (4 * exaggeration), 50)` heuristic.
    pub fn for_n(n: usize, seed: u64) -> Self {
        let max = (n.saturating_sub(1)) as f64 / 3.0;
        TsneConfig {
            perplexity: (30.0f64).min(max - 1e-9).max(2.0f64.min(max * 0.5)),
            learning_rate: (n as f64 / (4.0 * EXAGGERATION)).max(50.0),
            seed,
            ..TsneConfig::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct TsneResult {
    /// n x 2 embedding.
    pub points: Mat,
    /// KL divergence of the true affinities from the embedding, one value
    /// per iteration.
    pub kl_trace: Vec<f64>,
    /// Gaussian bandwidth found for each point.
    pub sigmas: Vec<f64>,
    /// Perplexity actually achieved by each point's bandwidth.
    pub achieved_perplexity: Vec<f64>,
    /// Index of the first iteration after early exaggeration ends.
    pub exaggeration_end: usize,
}

pub fn tsne_fit(vectors: &Mat, config: &TsneConfig) -> Result<TsneResult, SemanticError> {
    let n = vectors.rows();
    if n < 4 {
        return Err(SemanticError::TooFewPoints { n, needed: 4 });
    }
    let max_perplexity = (n - 1) as f64 / 3.0;
    if !(config.perplexity > 0.0) || config.perplexity >= max_perplexity {
        return Err(SemanticError::InfeasiblePerplexity {
            perplexity: config.perplexity,
            max: max_perplexity,
        });
    }
    if !vectors.is_finite() {
        return Err(SemanticError::NonFiniteInput);
    }

    // Pairwise squared distances in the input space.
    let mut d2 = Mat::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dist: f64 = vectors
                .row(i)
                .iter()
                .zip(vectors.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d2.set(i, j, dist);
            d2.set(j, i, dist);
        }
    }

    // Conditional affinities with per-point bandwidth from binary search.
    let mut p_cond = Mat::zeros(n, n);
    let mut sigmas = vec![0.0; n];
    let mut achieved = vec![0.0; n];
    for i in 0..n {
        let (beta, row, perp) = search_beta(&d2, i, config.perplexity);
        sigmas[i] = (0.5 / beta).sqrt();
        achieved[i] = perp;
        for (j, &pj) in row.iter().enumerate() {
            p_cond.set(i, j, pj);
        }
    }

    // Symmetrized joint affinities.
    let mut p = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = (p_cond.get(i, j) + p_cond.get(j, i)) / (2.0 * n as f64);
                p.set(i, j, v.max(P_MIN));
            }
        }
    }

    // Small random init, deterministic under the seed.
    let mut rng = substream(config.seed, Stage::TsneInit, 0);
    let mut y = Mat::zeros(n, 2);
    for i in 0..n {
        for c in 0..2 {
            let z: f64 = rng.sample(StandardNormal);
            y.set(i, c, 1e-4 * z);
        }
    }

    let exaggeration_end = config.iterations / 4;
    let mut velocity = Mat::zeros(n, 2);
    let mut gains = Mat::zeros(n, 2);
    for i in 0..n {
        gains.set(i, 0, 1.0);
        gains.set(i, 1, 1.0);
    }
    let mut kl_trace = Vec::with_capacity(config.iterations);
    let mut q = Mat::zeros(n, n);

    for iter in 0..config.iterations {
        let exag = if iter < exaggeration_end { EXAGGERATION } else { 1.0 };
        let momentum = if iter < exaggeration_end {
            config.momentum.0
        } else {
            config.momentum.1
        };

        // Student-t affinities in the embedding.
        let mut q_sum = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let dy0 = y.get(i, 0) - y.get(j, 0);
                let dy1 = y.get(i, 1) - y.get(j, 1);
                let w = 1.0 / (1.0 + dy0 * dy0 + dy1 * dy1);
                q.set(i, j, w);
                q.set(j, i, w);
                q_sum += 2.0 * w;
            }
        }

        // KL against the true affinities, before this iteration's update.
        let mut kl = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let pij = p.get(i, j);
                    let qij = (q.get(i, j) / q_sum).max(P_MIN);
                    kl += pij * (pij / qij).ln();
                }
            }
        }
        kl_trace.push(kl);

        // Full gradient first, then one synchronous update step.
        let mut grad = Mat::zeros(n, 2);
        for i in 0..n {
            let mut g0 = 0.0;
            let mut g1 = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = q.get(i, j);
                let qij = (w / q_sum).max(P_MIN);
                let coeff = 4.0 * (exag * p.get(i, j) - qij) * w;
                g0 += coeff * (y.get(i, 0) - y.get(j, 0));
                g1 += coeff * (y.get(i, 1) - y.get(j, 1));
            }
            if !g0.is_finite() || !g1.is_finite() {
                return Err(SemanticError::NonFiniteGradient { iteration: iter });
            }
            grad.set(i, 0, g0);
            grad.set(i, 1, g1);
        }
        // Adaptive per-coordinate gains: grow when the gradient opposes the
        // velocity, shrink when they agree. Keeps the fixed learning rate
        // stable across corpus sizes.
        for i in 0..n {
            for c in 0..2 {
                let g = grad.get(i, c);
                let same_sign = (g > 0.0) == (velocity.get(i, c) > 0.0);
                let gain = if same_sign {
                    (gains.get(i, c) * 0.8).max(0.01)
                } else {
                    gains.get(i, c) + 0.2
                };
                gains.set(i, c, gain);
                let v = momentum * velocity.get(i, c) - config.learning_rate * gain * g;
                velocity.set(i, c, v);
                y.set(i, c, y.get(i, c) + v);
            }
        }

        if iter % 100 == 0 {
            log::debug!("iteration {iter}: kl {:.6}", kl_trace.last().unwrap());
        }

        // Re-center to keep the embedding from drifting.
        let mut mean = [0.0, 0.0];
        for i in 0..n {
            mean[0] += y.get(i, 0);
            mean[1] += y.get(i, 1);
        }
        mean[0] /= n as f64;
        mean[1] /= n as f64;
        for i in 0..n {
            y.set(i, 0, y.get(i, 0) - mean[0]);
            y.set(i, 1, y.get(i, 1) - mean[1]);
        }
    }

    Ok(TsneResult {
        points: y,
        kl_trace,
        sigmas,
        achieved_perplexity: achieved,
        exaggeration_end,
    })
}

/// Binary search for the precision `beta = 1/(2 sigma^2)` of point `i` whose
/// conditional distribution hits the target perplexity.
///
/// Returns the precision, the conditional affinity row, and the achieved
/// perplexity. The row over `j != i` is computed with a max-shift for
/// stability; the shift cancels in the normalized probabilities.
fn search_beta(d2: &Mat, i: usize, target: f64) -> (f64, Vec<f64>, f64) {
    let n = d2.rows();
    let mut beta = 1.0;
    let mut beta_min = f64::NEG_INFINITY;
    let mut beta_max = f64::INFINITY;
    let mut row = vec![0.0; n];

    for _ in 0..SEARCH_ITER {
        let h = conditional_row(d2, i, beta, &mut row);
        let diff = h.exp() - target;
        if diff.abs() < PERPLEXITY_TOL {
            break;
        }
        if diff > 0.0 {
            // Too spread out: sharpen.
            beta_min = beta;
            beta = if beta_max.is_finite() { (beta + beta_max) / 2.0 } else { beta * 2.0 };
        } else {
            beta_max = beta;
            beta = if beta_min.is_finite() { (beta + beta_min) / 2.0 } else { beta / 2.0 };
        }
    }
    let perp = conditional_row(d2, i, beta, &mut row).exp();
    (beta, row, perp)
}

/// Fills `row` with `p_{j|i}` for the given precision and returns the Shannon
/// entropy (nats) of the row.
fn conditional_row(d2: &Mat, i: usize, beta: f64, row: &mut [f64]) -> f64 {
    let n = d2.rows();
    let mut min_d2 = f64::INFINITY;
    for j in 0..n {
        if j != i {
            min_d2 = min_d2.min(d2.get(i, j));
        }
    }
    let mut sum = 0.0;
    let mut weighted = 0.0;
    for j in 0..n {
        if j == i {
            row[j] = 0.0;
            continue;
        }
        let shifted = d2.get(i, j) - min_d2;
        let e = (-beta * shifted).exp();
        row[j] = e;
        sum += e;
        weighted += e * shifted;
    }
    let h = sum.ln() + beta * weighted / sum;
    for v in row.iter_mut() {
        *v /= sum;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Five one-hot points: all pairwise distances equal.
    fn equidistant_points() -> Mat {
        let mut m = Mat::zeros(5, 5);
        for i in 0..5 {
            m.set(i, i, 1.0);
        }
        m
    }

    #[test]
    fn equidistant_points_get_equal_sigmas() {
        let config = TsneConfig {
            perplexity: 1.2,
            iterations: 10,
            ..TsneConfig::default()
        };
        let result = tsne_fit(&equidistant_points(), &config).unwrap();
        for &s in &result.sigmas[1..] {
            assert!((s - result.sigmas[0]).abs() < 1e-6);
        }
    }

    #[test]
    fn perplexity_is_matched_per_point() {
        // Two loose Gaussian-ish blobs in 3 dims, fixed coordinates.
        let mut rows = Vec::new();
        for i in 0..12 {
            let base = if i < 6 { 0.0 } else { 4.0 };
            rows.push(vec![
                base + 0.31 * (i as f64).sin(),
                base + 0.17 * (i as f64 * 1.7).cos(),
                0.23 * (i as f64 * 0.9).sin(),
            ]);
        }
        let config = TsneConfig {
            perplexity: 3.0,
            iterations: 5,
            ..TsneConfig::default()
        };
        let result = tsne_fit(&Mat::from_rows(&rows), &config).unwrap();
        for &p in &result.achieved_perplexity {
            assert!((p - 3.0).abs() < 1e-4, "achieved {p}");
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let m = equidistant_points();
        let config = TsneConfig {
            perplexity: 1.2,
            iterations: 50,
            seed: 9,
            ..TsneConfig::default()
        };
        let a = tsne_fit(&m, &config).unwrap();
        let b = tsne_fit(&m, &config).unwrap();
        assert_eq!(a.points.data(), b.points.data());
        assert_eq!(a.kl_trace, b.kl_trace);
    }

    #[test]
    fn kl_trace_is_nonnegative_and_descends() {
        // Two overlapping-but-distinct clusters of 10 points in 10 dims.
        let mut rows = Vec::new();
        for i in 0..20 {
            let offset = if i < 10 { 0.0 } else { 2.0 };
            let mut row = vec![0.0; 10];
            for (c, v) in row.iter_mut().enumerate() {
                *v = offset + 0.15 * ((i * 7 + c * 3) % 11) as f64;
            }
            rows.push(row);
        }
        let config = TsneConfig {
            perplexity: 5.0,
            iterations: 400,
            seed: 3,
            learning_rate: 50.0,
            ..TsneConfig::default()
        };
        let result = tsne_fit(&Mat::from_rows(&rows), &config).unwrap();
        assert!(result.kl_trace.iter().all(|&k| k >= 0.0));
        let post_exaggeration = result.kl_trace[result.exaggeration_end];
        assert!(result.kl_trace.last().unwrap() < &post_exaggeration);
        assert!(*result.kl_trace.last().unwrap() < result.kl_trace[0]);
    }

    #[test]
    fn separated_clusters_embed_with_clear_structure() {
        use crate::seed::{substream, Stage};
        use rand::Rng;
        use rand_distr::StandardNormal;

        let mut rng = substream(11, Stage::Synthetic, 0);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for cluster in 0..2 {
            let center: Vec<f64> = (0..10)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    3.0 * z
                })
                .collect();
            for _ in 0..10 {
                rows.push(
                    center
                        .iter()
                        .map(|&m| {
                            let z: f64 = rng.sample(StandardNormal);
                            m + z
                        })
                        .collect(),
                );
                labels.push(cluster);
            }
        }
        let config = TsneConfig {
            perplexity: 5.0,
            iterations: 600,
            seed: 4,
            learning_rate: 50.0,
            ..TsneConfig::default()
        };
        let result = tsne_fit(&Mat::from_rows(&rows), &config).unwrap();
        let s = crate::semantic::silhouette(&result.points, &labels).unwrap();
        assert!(s > 0.5, "silhouette {s}");
    }

    #[test]
    fn infeasible_perplexity_is_rejected() {
        let m = equidistant_points();
        let config = TsneConfig { perplexity: 2.0, ..TsneConfig::default() };
        assert!(matches!(
            tsne_fit(&m, &config),
            Err(SemanticError::InfeasiblePerplexity { .. })
        ));
    }
}
