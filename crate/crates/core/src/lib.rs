//! Core algorithms for building and validating personality-driven agents.
//!
//! This crate is `no_std` (with `alloc`) and carries the pure computational
//! layer of the toolkit: scale definitions and scoring, parametric response
//! simulation, psychometric statistics (reliability, one-factor CFA, OLS),
//! embedding-space analysis with exact t-SNE, and deterministic prompt
//! rendering. All IO, file formats, HTTP backends, and the CLI live in the
//! companion `psychoforge` crate.
//!
//! Everything here is deterministic: randomness flows from explicit 64-bit
//! seeds through [`seed`] substreams, so identical inputs reproduce identical
//! outputs across machines and thread schedules.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod linalg;
pub mod persona;
pub mod psychometrics;
pub mod scales;
pub mod seed;
pub mod semantic;
pub mod simulate;

pub use scales::{Domain, ItemDefinition, Keying, ResponseVector, ScaleDefinition, ScoreReport};
