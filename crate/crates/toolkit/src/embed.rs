//! Embedding acquisition with a persistent cache-first store.
//!
//! The cache is a single append-safe JSONL file keyed by the content hash of
//! (model, text). Offline mode requires every text to be cached already; the
//! bundled fixture cache makes the semantic study fully reproducible without
//! network access. Refreshing against a live endpoint is an explicit,
//! logged operation since embedding models drift.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use psychoforge_core::semantic::{content_hash, EmbeddingRecord};

use crate::agent::RemoteBackend;

const FETCH_BATCH: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("failed to read cache {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to append to cache {path}: {source}")]
    Append {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cache {path} line {line} is corrupt: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("offline mode but '{text}' is not in the embedding cache")]
    MissingFromCache { text: String },
    #[error("remote embedding fetch needed but no backend configured")]
    NoBackend,
    #[error("embedding fetch failed: {0}")]
    Fetch(#[from] crate::agent::AgentError),
    #[error("embedding dimensions differ within one run: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// In-memory view of the cache file, hash-keyed; appends go straight to
/// disk.
pub struct EmbeddingCache {
    path: PathBuf,
    records: BTreeMap<String, EmbeddingRecord>,
}

impl EmbeddingCache {
    /// Opens (or lazily creates) a cache file.
    pub fn open(path: &Path) -> Result<Self, EmbedError> {
        let mut records = BTreeMap::new();
        if path.exists() {
            let text = std::fs::read_to_string(path)
                .map_err(|source| EmbedError::Read { path: path.into(), source })?;
            for (idx, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let record: EmbeddingRecord =
                    serde_json::from_str(line).map_err(|e| EmbedError::Corrupt {
                        path: path.into(),
                        line: idx + 1,
                        message: e.to_string(),
                    })?;
                records.insert(record.content_hash.clone(), record);
            }
        }
        Ok(EmbeddingCache { path: path.to_path_buf(), records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, hash: &str) -> Option<&EmbeddingRecord> {
        self.records.get(hash)
    }

    pub fn insert(&mut self, record: EmbeddingRecord) -> Result<(), EmbedError> {
        let line = serde_json::to_string(&record).expect("embedding record serialize");
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|source| EmbedError::Append { path: self.path.clone(), source })?;
        file.write_all(line.as_bytes())
            .and_then(|_| file.write_all(b"\n"))
            .map_err(|source| EmbedError::Append { path: self.path.clone(), source })?;
        self.records.insert(record.content_hash.clone(), record);
        Ok(())
    }
}

/// Cache-first embedding lookup; misses are fetched remotely in batches and
/// persisted. Output order matches input order.
pub fn embed_texts(
    texts: &[String],
    model_name: &str,
    cache: &mut EmbeddingCache,
    backend: Option<&RemoteBackend>,
    offline: bool,
) -> Result<Vec<EmbeddingRecord>, EmbedError> {
    let hashes: Vec<String> = texts.iter().map(|t| content_hash(t, model_name)).collect();

    // Distinct misses in first-seen order.
    let mut missing: Vec<&String> = Vec::new();
    for (text, hash) in texts.iter().zip(&hashes) {
        if cache.get(hash).is_none() && !missing.iter().any(|t| *t == text) {
            missing.push(text);
        }
    }

    if !missing.is_empty() {
        if offline {
            return Err(EmbedError::MissingFromCache { text: missing[0].clone() });
        }
        let backend = backend.ok_or(EmbedError::NoBackend)?;
        log::info!("fetching {} embeddings from the remote endpoint", missing.len());
        for chunk in missing.chunks(FETCH_BATCH) {
            let batch: Vec<String> = chunk.iter().map(|t| t.to_string()).collect();
            let vectors = backend.embed(model_name, &batch, 3)?;
            for (text, vector) in batch.into_iter().zip(vectors) {
                cache.insert(EmbeddingRecord::new(text, model_name, vector))?;
            }
        }
    }

    let mut dim: Option<usize> = None;
    let mut out = Vec::with_capacity(texts.len());
    for hash in &hashes {
        let record = cache.get(hash).expect("filled above").clone();
        match dim {
            None => dim = Some(record.vector.len()),
            Some(d) if d != record.vector.len() => {
                return Err(EmbedError::DimensionMismatch { left: d, right: record.vector.len() })
            }
            _ => {}
        }
        out.push(record);
    }
    Ok(out)
}
