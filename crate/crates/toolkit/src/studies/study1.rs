//! Semantic analysis of instrument items: cross-test cosine-similarity
//! panels (overall plus one per domain) and a 2-D t-SNE projection table.

use std::path::PathBuf;

use psychoforge_core::scales::{Domain, ScaleDefinition};
use psychoforge_core::semantic::{
    domain_similarity, overall_similarity, tsne_fit, ItemEmbedding, SimilarityMethod, TsneConfig,
};

use super::{fmt_float, write_csv, RunError, RunOptions};
use crate::agent::RemoteBackend;
use crate::embed::{embed_texts, EmbeddingCache};
use crate::formats::load_scale;
use crate::manifest::ManifestBuilder;

pub struct Study1Outcome {
    /// Mean cross-test similarity per test, overall panel.
    pub mean_cross_similarity: Vec<(String, f64)>,
    pub tsne_rows: usize,
}

pub fn run(opts: &RunOptions) -> Result<Study1Outcome, RunError> {
    let config_echo = serde_json::to_value(opts).expect("options serialize");
    let mut builder = ManifestBuilder::new(&opts.out_dir, "study1", config_echo)?;

    let bank_paths: Vec<PathBuf> = match &opts.banks {
        Some(banks) => banks.clone(),
        None => crate::assets::default_study1_banks(&opts.assets_dir),
    };
    let mut scales = Vec::new();
    for path in &bank_paths {
        scales.push(load_scale(path)?);
        builder.record_input(path)?;
    }

    let cache_path = opts
        .cache
        .clone()
        .unwrap_or_else(|| crate::assets::embedding_fixture_cache(&opts.assets_dir));
    let mut cache = EmbeddingCache::open(&cache_path)?;

    let backend = if opts.offline {
        None
    } else {
        // Only reach for credentials when a fetch could actually happen.
        RemoteBackend::from_env().ok()
    };

    let mut embedded: Vec<(String, Vec<ItemEmbedding>)> = Vec::new();
    for scale in &scales {
        let texts: Vec<String> = scale.items.iter().map(|i| i.text.clone()).collect();
        let records = embed_texts(
            &texts,
            &opts.embedding_model,
            &mut cache,
            backend.as_ref(),
            opts.offline && !opts.refresh_cache,
        )?;
        let items: Vec<ItemEmbedding> = scale
            .items
            .iter()
            .zip(records)
            .map(|(item, record)| ItemEmbedding { domain: item.domain, vector: record.vector })
            .collect();
        embedded.push((scale.name.clone(), items));
    }
    builder.record_input(&cache_path)?;

    // Six similarity panels: the overall average plus one per domain.
    let names: Vec<String> = embedded.iter().map(|(n, _)| n.clone()).collect();
    write_similarity_panel(&mut builder, "similarity_overall.csv", &names, &embedded, None, opts.method)?;
    for domain in Domain::ALL {
        let file = format!("similarity_{}.csv", domain.code());
        write_similarity_panel(&mut builder, &file, &names, &embedded, Some(domain), opts.method)?;
    }

    let mean_cross_similarity = mean_cross_test(&names, &embedded, opts.method)?;

    // t-SNE over the whole item corpus.
    let n: usize = embedded.iter().map(|(_, items)| items.len()).sum();
    let mut config = TsneConfig::for_n(n, opts.seed);
    if let Some(p) = opts.perplexity {
        config.perplexity = p;
    }
    if let Some(iters) = opts.iterations {
        config.iterations = iters;
    }
    let dim = embedded[0].1[0].vector.len();
    let mut matrix = psychoforge_core::linalg::Mat::zeros(n, dim);
    let mut labels: Vec<(String, Domain)> = Vec::with_capacity(n);
    let mut row = 0;
    for ((name, items), scale) in embedded.iter().zip(&scales) {
        for (item, def) in items.iter().zip(&scale.items) {
            for (c, v) in item.vector.iter().enumerate() {
                matrix.set(row, c, *v);
            }
            labels.push((name.clone(), def.domain));
            row += 1;
        }
    }
    let result = tsne_fit(&matrix, &config)?;

    let mut rows = vec![vec![
        "x".to_string(),
        "y".to_string(),
        "test".to_string(),
        "domain".to_string(),
    ]];
    for (i, (test, domain)) in labels.iter().enumerate() {
        rows.push(vec![
            fmt_float(result.points.get(i, 0)),
            fmt_float(result.points.get(i, 1)),
            test.clone(),
            domain.code().to_string(),
        ]);
    }
    write_csv(&builder.run_dir().join("tsne.csv"), &rows)?;
    builder.record_output("tsne.csv")?;

    let mut kl_rows = vec![vec!["iteration".to_string(), "kl".to_string()]];
    for (i, kl) in result.kl_trace.iter().enumerate() {
        kl_rows.push(vec![i.to_string(), format!("{kl:.8}")]);
    }
    write_csv(&builder.run_dir().join("tsne_kl_trace.csv"), &kl_rows)?;
    builder.record_output("tsne_kl_trace.csv")?;

    builder.finalize()?;
    Ok(Study1Outcome { mean_cross_similarity, tsne_rows: n })
}

fn similarity(
    a: &[ItemEmbedding],
    b: &[ItemEmbedding],
    domain: Option<Domain>,
    method: SimilarityMethod,
) -> Result<f64, RunError> {
    Ok(match domain {
        Some(d) => domain_similarity(a, b, d, method)?,
        None => overall_similarity(a, b, method)?,
    })
}

fn write_similarity_panel(
    builder: &mut ManifestBuilder,
    file: &str,
    names: &[String],
    embedded: &[(String, Vec<ItemEmbedding>)],
    domain: Option<Domain>,
    method: SimilarityMethod,
) -> Result<(), RunError> {
    let mut rows = Vec::with_capacity(names.len() + 1);
    let mut header = vec!["test".to_string()];
    header.extend(names.iter().cloned());
    rows.push(header);
    for (i, (name, items_i)) in embedded.iter().enumerate() {
        let mut row = vec![name.clone()];
        for (j, (_, items_j)) in embedded.iter().enumerate() {
            let value = if i == j {
                1.0
            } else {
                similarity(items_i, items_j, domain, method)?
            };
            row.push(fmt_float(value));
        }
        rows.push(row);
    }
    write_csv(&builder.run_dir().join(file), &rows)?;
    builder.record_output(file)?;
    Ok(())
}

/// Mean cross-test (off-diagonal) overall similarity per test, used for the
/// "which instrument sits farthest from the others" ranking.
fn mean_cross_test(
    names: &[String],
    embedded: &[(String, Vec<ItemEmbedding>)],
    method: SimilarityMethod,
) -> Result<Vec<(String, f64)>, RunError> {
    let mut out = Vec::with_capacity(names.len());
    for (i, (name, items_i)) in embedded.iter().enumerate() {
        let mut sum = 0.0;
        let mut count = 0;
        for (j, (_, items_j)) in embedded.iter().enumerate() {
            if i != j {
                sum += similarity(items_i, items_j, None, method)?;
                count += 1;
            }
        }
        out.push((name.clone(), sum / count as f64));
    }
    Ok(out)
}

/// Loads the scales used by the default semantic corpus; exposed for tests.
pub fn default_scales(opts: &RunOptions) -> Result<Vec<ScaleDefinition>, RunError> {
    let mut scales = Vec::new();
    for path in crate::assets::default_study1_banks(&opts.assets_dir) {
        scales.push(load_scale(&path)?);
    }
    Ok(scales)
}
