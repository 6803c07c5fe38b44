//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit seed. Independent draws that
//! belong to the same experiment (one per sampled graph, one per k-means
//! restart) use distinct ChaCha8 streams of the same seed, so results do not
//! depend on iteration order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Random generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed; used when an experiment needs whole sub-experiments
/// (each with its own streams) from one top-level seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer on a combined word
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
