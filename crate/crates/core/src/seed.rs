//! Seed derivation for reproducible, schedule-independent randomness.
//!
//! Every random draw in the toolkit comes from a ChaCha12 stream derived from
//! one root seed plus a (stage, index) pair, so per-agent work can run in any
//! order, or in parallel, without changing results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Pipeline stages that consume randomness. Each gets its own stream space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    FacetSampling,
    ItemGeneration,
    MockQuestionnaire,
    MockScenario,
    TsneInit,
    Synthetic,
}

impl Stage {
    fn tag(self) -> u64 {
        match self {
            Stage::FacetSampling => 1,
            Stage::ItemGeneration => 2,
            Stage::MockQuestionnaire => 3,
            Stage::MockScenario => 4,
            Stage::TsneInit => 5,
            Stage::Synthetic => 6,
        }
    }
}

/// RNG for unit `index` of `stage` under `root` seed.
///
/// Indexes up to 2^40 per stage stay collision-free.
pub fn substream(root: u64, stage: Stage, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(root);
    rng.set_stream((stage.tag() << 40) | (index & 0xff_ffff_ffff));
    rng
}
