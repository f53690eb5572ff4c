//! Reproducible random substreams.
//!
//! Every stochastic operation in the harness derives one independent
//! generator per work item (per cell, usually) from `(seed, domain, index)`.
//! Work items can then be sampled in parallel in any order, or on any number
//! of worker threads, and still produce identical output for a given seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain separators so that different operations sharing one user seed
/// never consume the same stream.
pub(crate) mod domain {
    pub const EFFICIENCY: u64 = 1;
    pub const COUNTS: u64 = 2;
    pub const TARGET_GENES: u64 = 3;
    pub const TARGET_CELLS: u64 = 4;
    pub const SYNTH_PROFILE: u64 = 5;
    pub const SYNTH_COUNTS: u64 = 6;
    pub const KMEANS: u64 = 7;
    pub const PCA: u64 = 8;
}

/// SplitMix64 finalizer; bijective on u64.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent ChaCha8 stream from `(seed, domain, index)`.
///
/// The derivation is a keyed hash, not a stream split: any `(domain, index)`
/// pair yields a generator whose state is unrelated to every other pair,
/// so per-item sampling is order- and thread-count-independent.
pub fn substream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut state = mix(seed ^ mix(domain ^ mix(index ^ 0x517c_c1b7_2722_0a95)));
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        chunk.copy_from_slice(&mix(state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
