//! Deterministic seed derivation for reproducible experiments.
//!
//! Every sampled quantity in this crate draws from a ChaCha20 stream derived
//! from `(seed, index, lane)`. Isolating lanes per sample and per player makes
//! results independent of how much randomness any one strategy consumes, and
//! lets evaluations share common random numbers across family members.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// SplitMix64 finalizer; a fixed, platform-independent 64-bit mixer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with two stream coordinates into a fresh 64-bit seed.
pub fn mix64(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = splitmix64(seed ^ 0x6a09_e667_f3bc_c908);
    z = splitmix64(z ^ a.wrapping_mul(0xd134_2543_de82_ef95));
    splitmix64(z ^ b.wrapping_mul(0x2545_f491_4f6c_dd1d))
}

/// An independent ChaCha20 stream for coordinate `(a, b)` under `seed`.
pub fn substream(seed: u64, a: u64, b: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(mix64(seed, a, b))
}
