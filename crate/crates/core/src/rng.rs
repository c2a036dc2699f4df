//! Seeded random streams.
//!
//! Every stochastic step in the pipeline draws from a [`SeedRng`] derived
//! from a user seed plus a stream tag, so independent stages (weight init,
//! epoch shuffling, undersampling, ...) can be varied separately while the
//! whole run stays a pure function of the top-level seed.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math;

pub type SeedRng = ChaCha8Rng;

/// SplitMix64 finalizer, used to mix a seed with a stream tag.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent seed from `base` and a sequence of tags.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix64(base), |acc, &t| mix64(acc ^ mix64(t)))
}

/// Hash a short ASCII label into a stream tag.
pub fn tag(label: &str) -> u64 {
    // FNV-1a
    label
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

pub fn stream(base: u64, tags: &[u64]) -> SeedRng {
    SeedRng::seed_from_u64(derive_seed(base, tags))
}

/// Uniform sample in `[lo, hi)`; returns `lo` when the range is empty.
pub fn uniform<R: RngCore>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        lo
    } else {
        lo + (hi - lo) * rng.gen::<f64>()
    }
}

/// Standard normal sample (Box-Muller).
pub fn normal<R: RngCore>(rng: &mut R) -> f64 {
    let u1 = 1.0 - rng.gen::<f64>();
    let u2 = rng.gen::<f64>();
    math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * core::f64::consts::PI * u2)
}
