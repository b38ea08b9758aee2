//! Seed discipline.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by the
//! master seed, with the stream id derived from a domain tag and a tuple of
//! indices (test day, block position, restart, replicate, ...). ChaCha is a
//! counter-based generator, so a stream is a pure function of
//! `(seed, domain, indices)` and draws do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent purposes for which random streams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    KMeansRestart = 1,
    BlockDraw = 2,
    BaggingReplicate = 3,
    Synthetic = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream id for `(domain, indices)`.
pub fn stream_id(domain: Domain, indices: &[u64]) -> u64 {
    indices
        .iter()
        .fold(splitmix64(domain as u64), |acc, &ix| splitmix64(acc ^ splitmix64(ix)))
}

/// Generator for one substream of the master seed.
pub fn substream(seed: u64, domain: Domain, indices: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(domain, indices));
    rng
}
