//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 generator (`rand_chacha`), whose output is
//! specified independently of platform and word size. The stream for
//! replicate `r` of a run with seed `s` is seeded with
//! `splitmix64(s ^ splitmix64(r))`, expanded to a 256-bit key by
//! `SeedableRng::seed_from_u64`. Stream 0 is the one used by a single
//! `generate` call, so replicate 0 of an ensemble reproduces it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// One round of the SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

pub fn stream(seed: u64, index: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, index))
}
