//! Keyed random streams.
//!
//! Every random draw in the crate comes from a generator keyed by the user
//! seed plus a path of integers (stream tag, antenna, user, sweep point,
//! frame, ...). Draws for one key never depend on how many other keys were
//! visited or in what order, so parallel loops stay reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TAG_CHANNEL: u64 = 0x6368_616e;
pub const TAG_SYMBOLS: u64 = 0x7379_6d62;
pub const TAG_NOISE: u64 = 0x6e6f_6973;
pub const TAG_FRAME: u64 = 0x6672_616d;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a 64-bit sub-seed from `seed` and a key path.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    let mut state = seed;
    let mut acc = splitmix64(&mut state);
    for &p in path {
        state ^= p.wrapping_mul(0xd6e8_feb8_6659_fd93);
        acc ^= splitmix64(&mut state).rotate_left(17);
        state = acc;
    }
    splitmix64(&mut state)
}

/// A ChaCha8 stream keyed by `seed` and `path`.
pub fn keyed_rng(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}
