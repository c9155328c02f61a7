//! Counter-keyed random streams.
//!
//! Every consumer derives its generator from `(seed, key)`, so results do not
//! depend on evaluation order or on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent ChaCha stream for `key` under `seed`.
pub fn stream(seed: u64, key: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng
}

/// Mixes two words into a derived seed (SplitMix64 finaliser).
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
