//! Seeded random streams.
//!
//! Every stochastic procedure in this crate draws from a ChaCha8 generator
//! derived from an explicit 64-bit seed. Independent tasks (per-run training,
//! per-image sampling) use separate streams of the same generator, so results
//! do not depend on scheduling or worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Stream = ChaCha8Rng;

/// Root stream for a seed.
pub fn root(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` under `seed`. Distinct indices never overlap.
pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derive a fresh 64-bit seed for sub-task `index` (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Standard normal deviate (Box-Muller).
pub fn gauss<R: Rng>(rng: &mut R) -> f64 {
    let mut u: f64 = rng.gen();
    while u <= 1e-300 {
        u = rng.gen();
    }
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}
