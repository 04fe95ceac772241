//! Deterministic seed derivation.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by a
//! master seed, a stream tag and an item index. Ensembles computed in
//! parallel therefore produce the same bits as a sequential loop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags. Distinct tags give independent generators for the same
/// master seed and index.
pub mod stream {
    pub const BASE_SUBORDINATOR: u64 = 1;
    pub const STRONG_SUBORDINATOR: u64 = 2;
    pub const BROWNIAN: u64 = 3;
    pub const NOISE: u64 = 4;
    pub const PATH: u64 = 5;
    pub const CLASSIFIER: u64 = 6;
    pub const TREE: u64 = 7;
    pub const RESTART: u64 = 8;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `(master, stream, index)` into a child seed.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ stream.wrapping_mul(0xd1b5_4a32_d192_ed03));
    splitmix64(b ^ index.wrapping_mul(0x8cb9_2ba7_2f3d_8dd7))
}

/// Generator for one `(master, stream, index)` triple.
pub fn rng_for(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}
