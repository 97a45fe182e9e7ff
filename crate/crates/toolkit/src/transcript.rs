//! Append-only transcript store: one JSON line per model completion, written
//! before parsing so expensive responses are never lost to a parse bug.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("failed to open transcript {path}: {source}")]
    Open {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to append to transcript: {0}")]
    Append(#[from] std::io::Error),
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TranscriptRecord {
    pub agent_id: String,
    pub timestamp: String,
    pub prompt_sha256: String,
    pub raw_response: String,
    pub attempts: usize,
}

/// Single-writer store; batch workers share it behind the internal mutex.
pub struct TranscriptStore {
    writer: Mutex<BufWriter<File>>,
}

impl TranscriptStore {
    pub fn open(path: &Path) -> Result<Self, TranscriptError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| TranscriptError::Open { path: path.into(), source })?;
        Ok(TranscriptStore { writer: Mutex::new(BufWriter::new(file)) })
    }

    pub fn append(&self, record: &TranscriptRecord) -> Result<(), TranscriptError> {
        let line = serde_json::to_string(record).expect("transcript record serialize");
        let mut writer = self.writer.lock().expect("transcript writer poisoned");
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        Ok(())
    }
}

pub fn read_transcripts(path: &Path) -> Result<Vec<TranscriptRecord>, TranscriptError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| TranscriptError::Open { path: path.into(), source })?;
    let mut records = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(line).map_err(|e| {
            TranscriptError::Append(std::io::Error::new(std::io::ErrorKind::InvalidData, e))
        })?);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn appends_and_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("transcripts.jsonl");
        let store = TranscriptStore::open(&path).unwrap();
        for i in 0..3 {
            store
                .append(&TranscriptRecord {
                    agent_id: format!("agent_{i}"),
                    timestamp: "2026-01-01T00:00:00Z".into(),
                    prompt_sha256: "abc".into(),
                    raw_response: format!("{{\"x\": {i}}}"),
                    attempts: 1,
                })
                .unwrap();
        }
        let records = read_transcripts(&path).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[2].agent_id, "agent_2");
    }
}
