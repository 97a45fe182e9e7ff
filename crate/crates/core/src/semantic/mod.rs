//! Embedding-space analysis: cosine similarity between instrument items,
//! cross-test domain similarity, cluster quality, and an exact t-SNE
//! projection for visualization data.

mod tsne;

pub use tsne::{tsne_fit, TsneConfig, TsneResult};

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

#[allow(unused_imports)]
use num_traits::Float; // sqrt/ln/... in no_std builds

use sha2::{Digest, Sha256};

use crate::linalg::Mat;
use crate::scales::Domain;

/// A cached text embedding, keyed by a digest of `(model, text)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EmbeddingRecord {
    pub text: String,
    pub model_name: String,
    pub vector: Vec<f64>,
    pub content_hash: String,
}

impl EmbeddingRecord {
    pub fn new(text: impl Into<String>, model_name: impl Into<String>, vector: Vec<f64>) -> Self {
        let text = text.into();
        let model_name = model_name.into();
        let content_hash = content_hash(&text, &model_name);
        EmbeddingRecord { text, model_name, vector, content_hash }
    }

    pub fn is_finite(&self) -> bool {
        self.vector.iter().all(|v| v.is_finite())
    }
}

/// Hex SHA-256 over the model name and text, separated by a unit separator so
/// the pair is unambiguous.
pub fn content_hash(text: &str, model_name: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model_name.as_bytes());
    hasher.update([0x1f]);
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum SemanticError {
    DimensionMismatch { left: usize, right: usize },
    ZeroVector,
    EmptyDomain(Domain),
    TooFewPoints { n: usize, needed: usize },
    InfeasiblePerplexity { perplexity: f64, max: f64 },
    NonFiniteGradient { iteration: usize },
    DegenerateLabels,
    NonFiniteInput,
}

impl fmt::Display for SemanticError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemanticError::DimensionMismatch { left, right } => {
                write!(f, "vector dimensions differ: {left} vs {right}")
            }
            SemanticError::ZeroVector => write!(f, "cosine undefined for a zero vector"),
            SemanticError::EmptyDomain(d) => write!(f, "no items in domain {d}"),
            SemanticError::TooFewPoints { n, needed } => {
                write!(f, "{n} points, need at least {needed}")
            }
            SemanticError::InfeasiblePerplexity { perplexity, max } => {
                write!(f, "perplexity {perplexity} must be below (n-1)/3 = {max}")
            }
            SemanticError::NonFiniteGradient { iteration } => {
                write!(f, "non-finite gradient at iteration {iteration}")
            }
            SemanticError::DegenerateLabels => {
                write!(f, "need at least two labels with two points each")
            }
            SemanticError::NonFiniteInput => write!(f, "input contains non-finite values"),
        }
    }
}

impl core::error::Error for SemanticError {}

/// Cosine similarity of two equal-dimension, non-zero vectors.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, SemanticError> {
    if u.len() != v.len() {
        return Err(SemanticError::DimensionMismatch { left: u.len(), right: v.len() });
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        if !a.is_finite() || !b.is_finite() {
            return Err(SemanticError::NonFiniteInput);
        }
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(SemanticError::ZeroVector);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// One instrument item placed in embedding space.
#[derive(Debug, Clone)]
pub struct ItemEmbedding {
    pub domain: Domain,
    pub vector: Vec<f64>,
}

/// How cross-test similarity aggregates over item pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityMethod {
    /// Mean cosine over all cross-test item pairs (default).
    PairwiseMean,
    /// Cosine between the two domain centroids.
    Centroid,
}

/// Similarity of two tests within one domain.
pub fn domain_similarity(
    test_a: &[ItemEmbedding],
    test_b: &[ItemEmbedding],
    domain: Domain,
    method: SimilarityMethod,
) -> Result<f64, SemanticError> {
    let a: Vec<&ItemEmbedding> = test_a.iter().filter(|e| e.domain == domain).collect();
    let b: Vec<&ItemEmbedding> = test_b.iter().filter(|e| e.domain == domain).collect();
    if a.is_empty() || b.is_empty() {
        return Err(SemanticError::EmptyDomain(domain));
    }
    match method {
        SimilarityMethod::PairwiseMean => {
            let mut sum = 0.0;
            for ea in &a {
                for eb in &b {
                    sum += cosine(&ea.vector, &eb.vector)?;
                }
            }
            Ok(sum / (a.len() * b.len()) as f64)
        }
        SimilarityMethod::Centroid => {
            let ca = centroid(&a)?;
            let cb = centroid(&b)?;
            cosine(&ca, &cb)
        }
    }
}

/// Mean similarity across the five domains, the "overall" panel value.
pub fn overall_similarity(
    test_a: &[ItemEmbedding],
    test_b: &[ItemEmbedding],
    method: SimilarityMethod,
) -> Result<f64, SemanticError> {
    let mut sum = 0.0;
    for domain in Domain::ALL {
        sum += domain_similarity(test_a, test_b, domain, method)?;
    }
    Ok(sum / 5.0)
}

fn centroid(items: &[&ItemEmbedding]) -> Result<Vec<f64>, SemanticError> {
    let dim = items[0].vector.len();
    let mut c = alloc::vec![0.0; dim];
    for item in items {
        if item.vector.len() != dim {
            return Err(SemanticError::DimensionMismatch {
                left: dim,
                right: item.vector.len(),
            });
        }
        for (acc, v) in c.iter_mut().zip(&item.vector) {
            *acc += v;
        }
    }
    for v in &mut c {
        *v /= items.len() as f64;
    }
    Ok(c)
}

/// Mean silhouette coefficient over all points with Euclidean distance.
///
/// Requires at least two clusters and two points per cluster.
pub fn silhouette(points: &Mat, labels: &[usize]) -> Result<f64, SemanticError> {
    let n = points.rows();
    if labels.len() != n {
        return Err(SemanticError::DimensionMismatch { left: labels.len(), right: n });
    }
    let max_label = labels.iter().copied().max().unwrap_or(0);
    let mut counts = alloc::vec![0usize; max_label + 1];
    for &l in labels {
        counts[l] += 1;
    }
    let clusters: Vec<usize> = (0..=max_label).filter(|&l| counts[l] > 0).collect();
    if clusters.len() < 2 || clusters.iter().any(|&l| counts[l] < 2) {
        return Err(SemanticError::DegenerateLabels);
    }

    let dist = |i: usize, j: usize| -> f64 {
        points
            .row(i)
            .iter()
            .zip(points.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };

    let mut total = 0.0;
    for i in 0..n {
        let mut sums = alloc::vec![0.0; max_label + 1];
        for j in 0..n {
            if i != j {
                sums[labels[j]] += dist(i, j);
            }
        }
        let own = labels[i];
        let a = sums[own] / (counts[own] - 1) as f64;
        let b = clusters
            .iter()
            .filter(|&&l| l != own)
            .map(|&l| sums[l] / counts[l] as f64)
            .fold(f64::INFINITY, f64::min);
        let s = if a.max(b) > 0.0 { (b - a) / a.max(b) } else { 0.0 };
        total += s;
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn cosine_basics() {
        let u = [1.0, 0.0];
        let v = [0.0, 1.0];
        assert_eq!(cosine(&u, &u).unwrap(), 1.0);
        assert_eq!(cosine(&u, &v).unwrap(), 0.0);
        let a = [1.0, 2.0, 2.0];
        let b = [2.0, 1.0, 2.0];
        assert!((cosine(&a, &b).unwrap() - 8.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_rejects_zero_and_mismatched() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 1.0]).unwrap_err(), SemanticError::ZeroVector);
        assert!(matches!(
            cosine(&[1.0], &[1.0, 2.0]).unwrap_err(),
            SemanticError::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn cosine_is_scale_invariant_and_symmetric() {
        let u = [1.0, 2.0, -0.5];
        let v = [0.3, -0.2, 1.0];
        let base = cosine(&u, &v).unwrap();
        let scaled: Vec<f64> = u.iter().map(|x| 3.5 * x).collect();
        assert!((cosine(&scaled, &v).unwrap() - base).abs() < 1e-12);
        assert_eq!(cosine(&v, &u).unwrap(), base);
        let flipped: Vec<f64> = u.iter().map(|x| -2.0 * x).collect();
        assert!((cosine(&flipped, &v).unwrap() + base).abs() < 1e-12);
    }

    #[test]
    fn single_item_domains_reduce_to_plain_cosine() {
        let a = [ItemEmbedding { domain: Domain::Extraversion, vector: vec![1.0, 2.0, 2.0] }];
        let b = [ItemEmbedding { domain: Domain::Extraversion, vector: vec![2.0, 1.0, 2.0] }];
        let sim =
            domain_similarity(&a, &b, Domain::Extraversion, SimilarityMethod::PairwiseMean)
                .unwrap();
        assert!((sim - 8.0 / 9.0).abs() < 1e-12);
        let cen =
            domain_similarity(&a, &b, Domain::Extraversion, SimilarityMethod::Centroid).unwrap();
        assert!((cen - 8.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn identical_tests_have_unit_similarity() {
        let items: Vec<ItemEmbedding> = Domain::ALL
            .iter()
            .map(|&d| ItemEmbedding { domain: d, vector: vec![1.0, 0.5, -0.25] })
            .collect();
        let sim = overall_similarity(&items, &items, SimilarityMethod::PairwiseMean).unwrap();
        assert!((sim - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_domain_is_an_error() {
        let a = [ItemEmbedding { domain: Domain::Extraversion, vector: vec![1.0, 0.0] }];
        assert!(matches!(
            domain_similarity(&a, &a, Domain::Openness, SimilarityMethod::PairwiseMean),
            Err(SemanticError::EmptyDomain(Domain::Openness))
        ));
    }

    #[test]
    fn silhouette_separated_clusters_near_one() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            rows.push(vec![0.0 + 0.01 * i as f64, 0.0]);
            labels.push(0);
            rows.push(vec![100.0 + 0.01 * i as f64, 0.0]);
            labels.push(1);
        }
        let s = silhouette(&Mat::from_rows(&rows), &labels).unwrap();
        assert!(s > 0.9, "silhouette {s}");
    }

    #[test]
    fn silhouette_rejects_singleton_clusters() {
        let points = Mat::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]);
        assert_eq!(
            silhouette(&points, &[0, 1, 2]).unwrap_err(),
            SemanticError::DegenerateLabels
        );
    }

    #[test]
    fn content_hash_distinguishes_model_and_text() {
        let a = content_hash("Bashful", "model-a");
        let b = content_hash("Bashful", "model-b");
        let c = content_hash("Bold", "model-a");
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
        assert_eq!(a, content_hash("Bashful", "model-a"));
    }
}
