//! Seeding.
//!
//! Every random stream in the crate is a `ChaCha8Rng` (the `rand_chacha`
//! ChaCha stream cipher with 8 rounds). Its output is fully specified and
//! identical on every platform. Child seeds are derived from a master seed
//! with [`derive_seed`], so adding a new consumer never shifts the streams of
//! existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}

/// Child seed for the stream named `label` with sub-index `index`:
/// `mix64(mix64(master ^ fnv1a(label)) ^ index)`.
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    mix64(mix64(master ^ fnv1a(label)) ^ index)
}
