//! Seed derivation. Every random stream in the toolkit is a ChaCha8 generator
//! keyed by a 64-bit seed mixed with a stream label, so sub-tasks (samples,
//! windows, epochs) get independent streams regardless of execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type WeldRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ mix64(stream.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn rng_from(seed: u64) -> WeldRng {
    WeldRng::seed_from_u64(seed)
}

pub fn rng_for(seed: u64, stream: u64) -> WeldRng {
    rng_from(derive_seed(seed, stream))
}

/// Stream labels, kept distinct so that e.g. window 0's init never collides
/// with epoch 0's shuffle.
pub mod stream {
    pub const SAMPLE: u64 = 1 << 40;
    pub const BASE_FIELD: u64 = 2 << 40;
    pub const SPLIT: u64 = 3 << 40;
    pub const WINDOW: u64 = 4 << 40;
    pub const TRANSCODER: u64 = 5 << 40;
    pub const EPOCH: u64 = 6 << 40;
    pub const INIT: u64 = 7 << 40;
    pub const SUBSAMPLE: u64 = 8 << 40;
    pub const JITTER: u64 = 9 << 40;
    pub const BASELINE: u64 = 10 << 40;
}
