//! Seed derivation for reproducible, independent random streams.
//!
//! Every random draw in the crate goes through a [`ChaCha8Rng`] seeded from a
//! `(master seed, stream label, index)` triple. Streams with different labels
//! or indices are statistically independent and never depend on the order in
//! which other streams were consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Derives the seed of stream `(label, index)` under `master`.
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    let mut s = splitmix64(master);
    s = splitmix64(s ^ fnv1a(label));
    splitmix64(s ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Generator for a raw seed.
pub fn rng_from_seed(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

/// Generator for stream `(label, index)` under `master`.
pub fn stream(master: u64, label: &str, index: u64) -> StreamRng {
    rng_from_seed(derive_seed(master, label, index))
}
