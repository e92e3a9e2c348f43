//! Seeded randomness with platform-stable draws.
//!
//! All draws go through [`uniform_f64`] and [`uniform_index`], which depend
//! only on the raw `u64` stream of ChaCha8. The results therefore do not
//! change with the sampling algorithms of whichever `rand` version is linked.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator used for simulation and tie-breaking.
pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform in `[0, 1)` with 53 bits of precision.
pub fn uniform_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in `0..n` by widening multiply. The bias is below `n / 2^64`.
pub fn uniform_index<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    assert!(n > 0, "uniform_index over an empty range");
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

/// Uniform in `0..n` for counts that may exceed `u64`.
pub fn uniform_index_u128<R: RngCore + ?Sized>(rng: &mut R, n: u128) -> u128 {
    assert!(n > 0, "uniform_index_u128 over an empty range");
    if n <= u64::MAX as u128 {
        return uniform_index(rng, n as usize) as u128;
    }
    // 128-bit draw reduced by modulus; n here is astronomically large, so
    // the modulo bias is negligible next to float effects elsewhere.
    let hi = rng.next_u64() as u128;
    let lo = rng.next_u64() as u128;
    ((hi << 64) | lo) % n
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `(trial, slot)` under `master`.
///
/// `splitmix64(splitmix64(splitmix64(master) ^ trial) ^ slot)`. Distinct
/// `(trial, slot)` pairs give unrelated seeds, and the value depends on
/// nothing else, so results do not depend on scheduling.
pub fn mix_seed(master: u64, trial: u64, slot: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ trial) ^ slot)
}
