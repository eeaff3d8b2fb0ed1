//! Deterministic random streams.
//!
//! Every realization owns a 64-bit seed. Independent quantities drawn for
//! that realization (fields, couplings, circuit gates) come from separate
//! ChaCha8 streams keyed by that seed, so adding draws to one stream never
//! shifts another. Realization seeds are derived from
//! `(base seed, sweep point, realization index)` by a SplitMix64 chain, which
//! makes every record reproducible without reference to execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent draw streams for one realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Fields = 0,
    Couplings = 1,
    Circuit = 2,
    Trials = 3,
}

/// Generator for `stream` of the realization identified by `seed`.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `realization` at sweep point `point`.
pub fn realization_seed(base: u64, point: u64, realization: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ point) ^ realization)
}
