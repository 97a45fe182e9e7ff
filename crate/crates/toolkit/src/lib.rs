//! IO, file formats, the agent runtime, and study orchestration for the
//! psychoforge toolkit. The pure algorithms live in `psychoforge-core`; this
//! crate wraps them in loaders, an HTTP/mock completion backend, persistence
//! (caches, transcripts, run manifests), and the `psychoforge` CLI.

pub mod agent;
pub mod assets;
pub mod embed;
pub mod fixtures;
pub mod formats;
pub mod manifest;
pub mod report;
pub mod studies;
pub mod transcript;

pub use psychoforge_core as core;

/// Toolkit version recorded in manifests and provenance sidecars.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
