//! Seeded random streams. Every consumer of randomness gets its own stream so
//! that adding draws in one component never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Named stream identifiers.
pub mod streams {
    pub const ENV: u64 = 1;
    pub const GOALS: u64 = 2;
    pub const REGIME: u64 = 3;
    pub const POLICY: u64 = 4;
    pub const TEACHER: u64 = 5;
    pub const EVAL: u64 = 6;
    pub const BENCH: u64 = 7;
    pub const CALIBRATION: u64 = 8;
    pub const DEMO_BUILD: u64 = 9;
}

/// Independent ChaCha stream `stream` of master seed `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed, e.g. one per checkpoint.
pub fn derive(seed: u64, salt: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
