//! Deterministic derivation of independent RNG streams.
//!
//! Every randomized stage of the pipeline (sampling, bootstrap replicates,
//! per-language batch work) runs on its own ChaCha8 stream whose seed is
//! derived from a master seed and a stream identifier. Derivation is a fixed
//! integer mix, so results are reproducible across platforms and independent
//! of evaluation order: replicate 17 draws the same values whether it runs
//! first, last, or concurrently with the others.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// splitmix64 finalizer; bijective on u64.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over bytes; fixed constants, stable across platforms and releases.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives the seed for stream `stream` under `master`.
///
/// For a fixed master seed the map is injective in `stream`, so no two
/// streams collide.
pub fn derive(master: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(master) ^ stream.wrapping_mul(0xa24b_aed4_963e_e407))
}

/// Derives the seed for a string-labelled stream (e.g. a language id).
pub fn derive_label(master: u64, label: &str) -> u64 {
    derive(master, fnv1a(label.as_bytes()))
}

/// RNG for one derived stream.
pub fn stream_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from [0, 1) with 53 random bits.
pub(crate) fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw from [0, n) by rejection; unbiased for any n >= 1.
pub(crate) fn below(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    debug_assert!(n > 0);
    // Largest multiple of n representable in the draw range; draws past it
    // would bias the remainder and are rejected.
    let zone = u64::MAX - u64::MAX % n;
    loop {
        let r = rng.next_u64();
        if r < zone {
            return r % n;
        }
    }
}
