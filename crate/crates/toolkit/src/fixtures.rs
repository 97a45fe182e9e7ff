//! Deterministic synthetic embedding fixtures.
//!
//! The committed fixture cache makes the semantic study runnable offline and
//! byte-reproducible. Fixture vectors are not real model output: they are
//! generated with an explicit structure (a shared axis per domain, a shared
//! axis per phrasing style, a per-test offset, and per-item noise keyed by
//! the item text) so that items cluster by domain and adjective-only
//! instruments sit measurably farther from statement-based ones. Refresh
//! against a live endpoint with `psychoforge study1 --refresh-cache` when
//! real embeddings are available.

use psychoforge_core::scales::{ItemKind, ScaleDefinition};
use psychoforge_core::seed::{substream, Stage};
use psychoforge_core::semantic::EmbeddingRecord;
use rand::Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

pub const FIXTURE_DIM: usize = 64;
pub const FIXTURE_SEED: u64 = 20_240_125;

const DOMAIN_WEIGHT: f64 = 1.0;
const STYLE_WEIGHT: f64 = 0.6;
const TEST_WEIGHT: f64 = 0.3;
const NOISE_WEIGHT: f64 = 0.8;

fn axis(tag: u64, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = substream(seed, Stage::Synthetic, tag);
    let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    normalize(v)
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x /= norm;
        }
    }
    v
}

fn text_tag(text: &str) -> u64 {
    let digest = Sha256::digest(text.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes")) & 0xff_ffff
}

/// One item's synthetic vector.
pub fn synthetic_embedding(
    text: &str,
    kind: ItemKind,
    domain: psychoforge_core::scales::Domain,
    test_name: &str,
    dim: usize,
    seed: u64,
) -> Vec<f64> {
    let domain_idx = psychoforge_core::scales::Domain::ALL
        .iter()
        .position(|d| *d == domain)
        .expect("known domain") as u64;
    let style_idx = match kind {
        ItemKind::Statement => 0,
        ItemKind::Adjective => 1,
    };
    let domain_axis = axis(1_000 + domain_idx, dim, seed);
    let style_axis = axis(2_000 + style_idx, dim, seed);
    let test_axis = axis(3_000 + text_tag(test_name), dim, seed);
    let noise_axis = axis(4_000_000 + text_tag(text), dim, seed);

    let mut v = vec![0.0; dim];
    for i in 0..dim {
        v[i] = DOMAIN_WEIGHT * domain_axis[i]
            + STYLE_WEIGHT * style_axis[i]
            + TEST_WEIGHT * test_axis[i]
            + NOISE_WEIGHT * noise_axis[i];
    }
    normalize(v)
}

/// Fixture records for every item of every bank, in bank order.
pub fn synthetic_bank_embeddings(
    scales: &[ScaleDefinition],
    model_name: &str,
    dim: usize,
    seed: u64,
) -> Vec<EmbeddingRecord> {
    let mut out = Vec::new();
    for scale in scales {
        for item in &scale.items {
            let vector =
                synthetic_embedding(&item.text, item.kind, item.domain, &scale.name, dim, seed);
            out.push(EmbeddingRecord::new(item.text.clone(), model_name, vector));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use psychoforge_core::scales::Domain;
    use psychoforge_core::semantic::cosine;

    #[test]
    fn generator_is_deterministic() {
        let a = synthetic_embedding("Is talkative", ItemKind::Statement, Domain::Extraversion, "BFI2", 64, 1);
        let b = synthetic_embedding("Is talkative", ItemKind::Statement, Domain::Extraversion, "BFI2", 64, 1);
        assert_eq!(a, b);
        let c = synthetic_embedding("Is talkative", ItemKind::Statement, Domain::Extraversion, "BFI2", 64, 2);
        assert_ne!(a, c);
    }

    #[test]
    fn same_domain_beats_cross_domain_and_shared_style_beats_mixed() {
        let bfi_e = synthetic_embedding("Is outgoing, sociable", ItemKind::Statement, Domain::Extraversion, "BFI2", 64, 1);
        let ipip_e = synthetic_embedding("Start conversations", ItemKind::Statement, Domain::Extraversion, "IPIP-50", 64, 1);
        let mm_e = synthetic_embedding("Talkative", ItemKind::Adjective, Domain::Extraversion, "Mini-Markers", 64, 1);
        let bfi_o = synthetic_embedding("Is curious", ItemKind::Statement, Domain::Openness, "BFI2", 64, 1);

        let statement_pair = cosine(&bfi_e, &ipip_e).unwrap();
        let mixed_pair = cosine(&bfi_e, &mm_e).unwrap();
        let cross_domain = cosine(&bfi_e, &bfi_o).unwrap();
        assert!(statement_pair > mixed_pair, "{statement_pair} vs {mixed_pair}");
        assert!(mixed_pair > cross_domain, "{mixed_pair} vs {cross_domain}");
    }
}
