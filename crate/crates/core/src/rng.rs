//! Seed derivation and per-stream random number generators.
//!
//! Every random consumer in the crate is driven by a [`ChaCha8Rng`], which is
//! a counter-based generator: a 64-bit seed picks the key and a 64-bit stream
//! id picks an independent keystream. Monte-Carlo loops use the sample index
//! as the stream id, so sample `s` draws the same numbers no matter which
//! thread runs it or how many samples are requested in total.
//!
//! Experiment cells derive their seeds with [`derive_seed`], a SplitMix64
//! chain over the master seed and the cell coordinates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type OpsRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a list of coordinates into a new 64-bit seed.
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(master), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

/// Hashes a label (method name, experiment kind) into a coordinate.
pub fn label_coord(label: &str) -> u64 {
    label
        .bytes()
        .fold(0xCBF2_9CE4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
        })
}

pub fn seeded(seed: u64) -> OpsRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for stream `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> OpsRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
