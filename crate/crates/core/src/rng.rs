//! Deterministic random streams.
//!
//! All randomness in this crate flows through [`ChaCha8Rng`] seeded by a
//! [`splitmix64`] chain over `(root seed, domain tag, indices...)`. ChaCha8 is
//! portable and value-stable across platforms, and the derived-stream scheme
//! means any sub-computation (an instance, a mutation, a batch draw) can be
//! reproduced from the root seed and its coordinates alone — no RNG state
//! needs to be carried between iterations or threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Domain tags keep unrelated streams disjoint even when their numeric
/// indices collide.
pub mod domain {
    pub const INSTANCE: u64 = 0x01;
    pub const INIT: u64 = 0x02;
    pub const MUTATE: u64 = 0x03;
    pub const LAMBDA: u64 = 0x04;
    pub const BATCH: u64 = 0x05;
    pub const SAMPLE_DECODE: u64 = 0x06;
}

/// The single finalizer step of the splitmix64 generator.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a list of words into one seed. Order-sensitive.
pub fn mix(parts: &[u64]) -> u64 {
    let mut acc = 0x243f_6a88_85a3_08d3; // pi fractional bits, arbitrary non-zero start
    for &p in parts {
        acc = splitmix64(acc ^ p);
    }
    acc
}

/// A fresh stream for the given seed words.
pub fn stream(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(parts))
}

/// Uniform draw in `[0, 1)`.
#[inline]
pub fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen::<f64>()
}

/// Uniform draw in `[-half_width, half_width)`.
#[inline]
pub fn uniform_sym(rng: &mut ChaCha8Rng, half_width: f64) -> f64 {
    (rng.gen::<f64>() * 2.0 - 1.0) * half_width
}

/// Standard normal draw.
#[inline]
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}
