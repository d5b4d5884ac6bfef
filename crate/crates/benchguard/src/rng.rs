//! Deterministic seeded randomness.
//!
//! All resampling operations draw from per-unit substreams derived from
//! `(seed, stream)` so results are bitwise identical regardless of thread
//! count or scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 step. Small, well-mixed, and stable across platforms.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Generator for substream `stream` of master seed `seed`.
///
/// Replicate r of a resampling run uses `substream(seed, r)`; the draws in
/// one replicate are independent of every other replicate's.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut state = seed;
    let a = splitmix64(&mut state);
    state ^= stream.wrapping_mul(0xd1342543de82ef95).wrapping_add(1);
    let b = splitmix64(&mut state);
    let c = splitmix64(&mut state);
    let d = splitmix64(&mut state);
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&a.to_le_bytes());
    key[8..16].copy_from_slice(&b.to_le_bytes());
    key[16..24].copy_from_slice(&c.to_le_bytes());
    key[24..32].copy_from_slice(&d.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
