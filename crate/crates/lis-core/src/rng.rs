//! Seed handling.
//!
//! Every randomized routine takes either a `&mut` RNG or a `u64` master seed.
//! Where work is split across parallel workers (Fisher-matrix accumulation,
//! replicate chains) each unit of work derives its own generator from the
//! master seed and a fixed stream tag, so results are identical for any worker
//! count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default generator used throughout: fast, seedable, portable across
/// platforms and releases.
pub type SeedRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG seeded directly from a master seed.
pub fn seeded(master: u64) -> SeedRng {
    SeedRng::seed_from_u64(master)
}

/// Independent stream derived from `(master, tag)`.
///
/// Tags are small fixed integers chosen at the call site (chain index, MC
/// sample index, purpose constants); distinct tags give independent streams.
pub fn derived(master: u64, tag: u64) -> SeedRng {
    // Two mixing rounds keep nearby (master, tag) pairs far apart.
    SeedRng::seed_from_u64(splitmix64(master ^ splitmix64(tag)))
}
