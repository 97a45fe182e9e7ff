//! Run manifests: a per-run record of the exact configuration, input hashes,
//! and output inventory, written once after a run's outputs are complete.
//! Mock-backend runs are fully determined by (config, seed, input hashes), so
//! the manifest is what makes a run auditable and reproducible.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse manifest {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("output '{name}' hash mismatch: manifest {expected}, file {actual}")]
    HashMismatch { name: String, expected: String, actual: String },
    #[error("output '{name}' listed in manifest is missing")]
    MissingOutput { name: String },
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub command: String,
    pub created_utc: String,
    pub config: serde_json::Value,
    /// Absolute or user-supplied input paths and their content hashes.
    pub inputs: BTreeMap<String, String>,
    /// Run-dir-relative output names and their content hashes.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String, ManifestError> {
    let bytes =
        fs::read(path).map_err(|source| ManifestError::Read { path: path.into(), source })?;
    Ok(sha256_bytes(&bytes))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects a run while it executes, then writes the manifest exactly once.
pub struct ManifestBuilder {
    run_dir: PathBuf,
    manifest: RunManifest,
    written: bool,
}

impl ManifestBuilder {
    pub fn new(
        run_dir: &Path,
        command: &str,
        config: serde_json::Value,
    ) -> Result<Self, ManifestError> {
        fs::create_dir_all(run_dir)
            .map_err(|source| ManifestError::Write { path: run_dir.into(), source })?;
        Ok(ManifestBuilder {
            run_dir: run_dir.to_path_buf(),
            manifest: RunManifest {
                toolkit_version: crate::VERSION.to_string(),
                command: command.to_string(),
                created_utc: chrono::Utc::now().to_rfc3339(),
                config,
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
            },
            written: false,
        })
    }

    pub fn run_dir(&self) -> &Path {
        &self.run_dir
    }

    pub fn record_input(&mut self, path: &Path) -> Result<(), ManifestError> {
        let hash = sha256_file(path)?;
        self.manifest.inputs.insert(path.display().to_string(), hash);
        Ok(())
    }

    /// Resolves a run-dir-relative output name and records its hash; call
    /// after the file is fully written.
    pub fn record_output(&mut self, name: &str) -> Result<(), ManifestError> {
        let hash = sha256_file(&self.run_dir.join(name))?;
        self.manifest.outputs.insert(name.to_string(), hash);
        Ok(())
    }

    /// Writes the manifest; valid exactly once, after all outputs exist.
    pub fn finalize(mut self) -> Result<RunManifest, ManifestError> {
        assert!(!self.written, "manifest already written");
        self.written = true;
        let path = self.run_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serialize");
        fs::write(&path, text).map_err(|source| ManifestError::Write { path, source })?;
        Ok(self.manifest)
    }
}

pub fn load_manifest(run_dir: &Path) -> Result<RunManifest, ManifestError> {
    let path = run_dir.join(MANIFEST_FILE);
    let text =
        fs::read_to_string(&path).map_err(|source| ManifestError::Read { path: path.clone(), source })?;
    serde_json::from_str(&text)
        .map_err(|e| ManifestError::Parse { path, message: e.to_string() })
}

/// Verifies that every output listed in the manifest is present and carries
/// the recorded hash.
pub fn verify_outputs(run_dir: &Path, manifest: &RunManifest) -> Result<(), ManifestError> {
    for (name, expected) in &manifest.outputs {
        let path = run_dir.join(name);
        if !path.exists() {
            return Err(ManifestError::MissingOutput { name: name.clone() });
        }
        let actual = sha256_file(&path)?;
        if &actual != expected {
            return Err(ManifestError::HashMismatch {
                name: name.clone(),
                expected: expected.clone(),
                actual,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("table.csv"), "a,b\n1,2\n").unwrap();

        let mut builder =
            ManifestBuilder::new(dir.path(), "study1", serde_json::json!({"seed": 7})).unwrap();
        builder.record_output("table.csv").unwrap();
        builder.finalize().unwrap();

        let manifest = load_manifest(dir.path()).unwrap();
        verify_outputs(dir.path(), &manifest).unwrap();

        std::fs::write(dir.path().join("table.csv"), "a,b\n9,9\n").unwrap();
        let err = verify_outputs(dir.path(), &manifest).unwrap_err();
        assert!(matches!(err, ManifestError::HashMismatch { .. }));
    }
}
