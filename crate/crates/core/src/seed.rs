//! Deterministic seed derivation.
//!
//! Every random draw in the crate comes from a [`RandomSeed`] obtained by
//! mixing a master seed with a purpose tag and an index. Streams derived from
//! distinct `(tag, index)` pairs are independent for all practical purposes,
//! so parallel trials never coordinate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What a derived stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Trial = 1,
    Matrix = 2,
    Signal = 3,
    Noise = 4,
    Decoder = 5,
    Probe = 6,
    PairChoice = 7,
}

/// A 64-bit seed. Derivation is a pure function of `(self, purpose, index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RandomSeed(pub u64);

impl RandomSeed {
    pub const fn new(master: u64) -> Self {
        RandomSeed(master)
    }

    pub const fn value(self) -> u64 {
        self.0
    }

    /// Child seed for the given purpose and index.
    pub fn derive(self, purpose: Purpose, index: u64) -> RandomSeed {
        let tagged = mix64(self.0 ^ mix64((purpose as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        RandomSeed(mix64(tagged ^ mix64(index.wrapping_add(0xD1B5_4A32_D192_ED03))))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for RandomSeed {
    fn from(v: u64) -> Self {
        RandomSeed(v)
    }
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
