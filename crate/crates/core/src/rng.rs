//! Deterministic RNG streams.
//!
//! Every random quantity in a run is drawn from a ChaCha stream whose seed is a
//! hash of the master seed and a tuple of tags, so clients can run in any
//! order (or in parallel) and still reproduce the same draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Regularizer = 1,
    UserInit = 2,
    ItemInit = 3,
    Prr = 4,
    Noise = 5,
    Privacy = 6,
    Pairing = 7,
    Split = 8,
    Subsample = 9,
    Perturb = 10,
    Synthetic = 11,
    Repetition = 12,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mixes a master seed with a purpose and two indices into a child seed.
pub fn derive_seed(master: u64, purpose: Purpose, a: u64, b: u64) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ purpose as u64);
    h = splitmix64(h ^ a);
    splitmix64(h ^ b.rotate_left(32))
}

pub fn stream(master: u64, purpose: Purpose, a: u64, b: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, purpose, a, b))
}
