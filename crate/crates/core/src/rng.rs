// Copyright 2026 The stprep Authors
// SPDX-License-Identifier: Apache-2.0

//! Seeded random streams.
//!
//! Every stochastic stage draws from a ChaCha stream whose seed is derived
//! from one global seed, so stages can be re-run in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of substream `index` under `seed`: `mix(mix(seed) ^ index)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix(mix(seed) ^ index)
}

/// Seed of a named stage (`"data"`, `"init"`, `"shuffle"`, ...): the stage
/// name is hashed with 64-bit FNV-1a and used as the substream index.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    derive_seed(seed, fnv1a(stage.as_bytes()))
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ *b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
