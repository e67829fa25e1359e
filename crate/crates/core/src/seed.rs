//! Stable seed derivation. Every random stream in the crate is a ChaCha8
//! generator seeded from a tuple of coordinates, so results never depend on
//! evaluation order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a domain tag and coordinates into one 64-bit seed.
pub fn derive_seed(domain: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(domain), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(domain: u64, parts: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(domain, parts))
}

pub(crate) const SUBJECT_DOMAIN: u64 = 0x5355_424A; // "SUBJ"
pub(crate) const RUN_DOMAIN: u64 = 0x5255_4E53; // "RUNS"
