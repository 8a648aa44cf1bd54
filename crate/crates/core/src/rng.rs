//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! keyed by a master seed and a stream id, so independent consumers never
//! share state and results do not depend on call order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream ids reserved for pipeline stages.
pub mod stream {
    pub const SPLIT: u64 = 1;
    pub const FOREST: u64 = 2;
    pub const INIT: u64 = 3;
    pub const TRAIN: u64 = 4;
    pub const SYNTH_FEATURES: u64 = 5;
    pub const SYNTH_SURVIVAL: u64 = 6;
    pub const SYNTH_PROJECTION: u64 = 7;
    pub const LR_FINDER: u64 = 8;
    pub const PERMUTE: u64 = 9;
}

pub fn seeded(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream keyed by a name, for consumers identified by label rather than
/// position (e.g. synthetic clinical variables).
pub fn named(seed: u64, name: &str) -> Rng {
    seeded(seed, fnv1a(name.as_bytes()) | (1 << 63))
}

/// Mixes `index` into `seed` (splitmix64 finalizer).
pub fn derive(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
