//! Locations of the bundled data files: item banks, prompt templates, the
//! expansion table, scenarios, the mock crosswalk, demo simulation
//! parameters, and the offline embedding fixture cache.
//!
//! Everything here is plain data so instruments and wording can be replaced
//! without a rebuild; the paths below are only defaults and every command
//! accepts overrides.

use std::path::{Path, PathBuf};

/// Default assets directory: `$PSYCHOFORGE_ASSETS` if set, otherwise the
/// copy that ships with the source tree.
pub fn assets_dir() -> PathBuf {
    match std::env::var_os("PSYCHOFORGE_ASSETS") {
        Some(dir) => PathBuf::from(dir),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("assets"),
    }
}

pub fn bfi2_bank(assets: &Path) -> PathBuf {
    assets.join("banks/bfi2.json")
}

pub fn mini_markers_bank(assets: &Path) -> PathBuf {
    assets.join("banks/mini_markers.json")
}

pub fn ipip50_bank(assets: &Path) -> PathBuf {
    assets.join("banks/ipip50.json")
}

/// Banks used by the semantic study, in presentation order.
pub fn default_study1_banks(assets: &Path) -> Vec<PathBuf> {
    vec![bfi2_bank(assets), ipip50_bank(assets), mini_markers_bank(assets)]
}

pub fn templates_dir(assets: &Path) -> PathBuf {
    assets.join("templates")
}

pub fn expansion_table(assets: &Path) -> PathBuf {
    assets.join("expansion_bfi2.json")
}

pub fn scenarios(assets: &Path) -> PathBuf {
    assets.join("scenarios.json")
}

pub fn crosswalk(assets: &Path) -> PathBuf {
    assets.join("mock_crosswalk.json")
}

pub fn demo_params(assets: &Path) -> PathBuf {
    assets.join("demo_simulation_params.json")
}

pub fn embedding_fixture_cache(assets: &Path) -> PathBuf {
    assets.join("embeddings_fixture.jsonl")
}

pub fn reference_values(assets: &Path) -> PathBuf {
    assets.join("reference_values.json")
}
