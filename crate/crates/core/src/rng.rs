//! Named, splittable seed streams.
//!
//! Every random draw in the crate goes through a [`ChaCha8Rng`] seeded by
//! [`derive_seed`], which mixes a master seed with a stream label and an
//! index. The mixing is a fixed SplitMix64 chain so that derived seeds are
//! identical across platforms and toolchain versions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of stream `label`, element `index`, under `master`.
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    let mut h = splitmix64(master);
    for chunk in label.as_bytes().chunks(8) {
        let mut buf = [0u8; 8];
        buf[..chunk.len()].copy_from_slice(chunk);
        h = splitmix64(h ^ u64::from_le_bytes(buf));
    }
    // length tag keeps "ab" and "ab\0" apart
    h = splitmix64(h ^ label.len() as u64);
    splitmix64(h ^ index)
}

pub fn rng_from_seed(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(master: u64, label: &str, index: u64) -> StreamRng {
    rng_from_seed(derive_seed(master, label, index))
}
