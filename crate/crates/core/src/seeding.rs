//! Deterministic derivation of independent RNG sub-streams.
//!
//! Every stochastic channel (phase tones, shaped bands, additive noise,
//! individual Monte-Carlo shots, ...) draws from its own ChaCha stream whose
//! seed is derived from the user seed and a stream label. Results are
//! therefore reproducible bit for bit and independent of the order in which
//! channels are evaluated.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes a user seed with a stream label into an independent sub-seed
/// (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for the sub-stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream))
}
