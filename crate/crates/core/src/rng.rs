//! Deterministic substream derivation for parallel Monte-Carlo trials.
//!
//! Each (seed, trial, purpose) triple maps to its own ChaCha stream, so a
//! trial's randomness is independent of execution order and of which other
//! trials run. ChaCha8 exposes 2^64 independent streams per seed; we key the
//! stream id on the trial index and a small purpose tag.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags for the per-trial substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// User positions within the hexagons.
    UserDrop,
    /// Log-normal shadowing draws.
    Shadowing,
    /// Random baseline permutations.
    Assignments,
    /// Small-scale fading, one stream per antenna-count index.
    SmallScale(u32),
    /// Pilot noise, one stream per antenna-count index.
    PilotNoise(u32),
}

impl Purpose {
    fn tag(self) -> u64 {
        // Antenna-count indices are far below 2^20 in practice.
        match self {
            Purpose::UserDrop => 0,
            Purpose::Shadowing => 1,
            Purpose::Assignments => 2,
            Purpose::SmallScale(i) => 0x10_0000 + u64::from(i),
            Purpose::PilotNoise(i) => 0x20_0000 + u64::from(i),
        }
    }
}

/// RNG for one (seed, trial, purpose) substream.
pub fn substream(seed: u64, trial: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // 2^22 purpose tags per trial keeps streams disjoint for any trial count
    // below 2^42.
    rng.set_stream(trial.wrapping_shl(22) | purpose.tag());
    rng
}
