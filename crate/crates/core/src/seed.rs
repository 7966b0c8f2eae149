//! Seed splitting.
//!
//! Every random stream in the crate is derived from one 64-bit root seed:
//! `child(root, tag, index)` hashes the tag with FNV-1a, folds it and the
//! index into the root, and finishes with a SplitMix64 round. Scene
//! generation uses tag `"scene"`, humans `"human"`, episodes `"episode"`,
//! policies `"agent"`; the index is the position within that family.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

pub fn child(root: u64, tag: &str, index: u64) -> u64 {
    splitmix64(splitmix64(root ^ fnv1a(tag)).wrapping_add(index))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn child_rng(root: u64, tag: &str, index: u64) -> ChaCha8Rng {
    rng(child(root, tag, index))
}
