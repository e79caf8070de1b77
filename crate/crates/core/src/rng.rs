//! Deterministic per-path random streams.
//!
//! Each path owns ChaCha substreams addressed by (master seed, path index,
//! block tag). Streams are derived statelessly, so results are bit-identical
//! for a given seed no matter how paths are split across worker threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent draw blocks within one path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamBlock {
    /// Joint Gaussian vector driving the volatility and the correlated part
    /// of the price.
    Driving,
    /// Brownian increments orthogonal to the driving motion.
    Orthogonal,
}

// Stream layout: low 56 bits path index, high 8 bits block tag.
const PATH_BITS: u32 = 56;

/// RNG for one (path, block) cell of a batch keyed by `seed`.
pub fn path_rng(seed: u64, path_index: u64, block: StreamBlock) -> ChaCha8Rng {
    debug_assert!(path_index < (1 << PATH_BITS));
    let tag = match block {
        StreamBlock::Driving => 0u64,
        StreamBlock::Orthogonal => 1u64,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << PATH_BITS) | path_index);
    rng
}

/// Derives an independent sub-seed (splitmix64 mix), e.g. one per scan row.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
