//! Random seeds.
//!
//! A [`RandomSeed`] carries the scalar `xi` in `[0, 1)` that a learner sees,
//! plus a key for a ChaCha stream from which learners and strategies can draw
//! further values. Two seeds compare equal iff both parts agree, so fits that
//! share a seed are bit-identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent 64-bit key for sub-stream `index` of `master`.
///
/// Used to give every Monte-Carlo trial its own stream, so results do not
/// depend on how trials are split across workers.
pub fn derive_key(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(0xD1B5_4A32_D192_ED03)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSeed {
    value: f64,
    key: u64,
}

impl RandomSeed {
    /// Seed whose value is the first uniform draw of the stream keyed by `key`.
    pub fn from_key(key: u64) -> Self {
        let value = ChaCha8Rng::seed_from_u64(key).random::<f64>();
        RandomSeed { value, key }
    }

    /// Seed with a prescribed value. The stream key is derived from the bits
    /// of `value`, so equal values give equal seeds.
    ///
    /// Panics if `value` is outside `[0, 1]`.
    pub fn from_value(value: f64) -> Self {
        assert!(
            (0.0..=1.0).contains(&value),
            "seed value {value} outside [0, 1]"
        );
        RandomSeed {
            value,
            key: mix64(value.to_bits()),
        }
    }

    pub fn derived(master: u64, index: u64) -> Self {
        Self::from_key(derive_key(master, index))
    }

    /// The scalar `xi`.
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Generator for further draws. For seeds built with [`from_key`](Self::from_key)
    /// the first draw (which equals `value`) has already been consumed.
    pub fn stream(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        let _: f64 = rng.random();
        rng
    }
}
