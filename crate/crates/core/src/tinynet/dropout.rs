use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Scalar;

/// Deterministic source of Bernoulli dropout masks.
///
/// A stream is identified by `(seed, counter)`: the seed selects the ChaCha
/// key and the counter selects an independent ChaCha stream under that key.
/// Two `MaskStream`s built from the same pair produce bit-identical masks, and
/// passes that run in parallel get distinct counters.
#[derive(Clone, Debug)]
pub struct MaskStream {
    seed: u64,
    counter: u64,
    rng: ChaCha8Rng,
}

impl MaskStream {
    pub fn new(seed: u64, counter: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(counter);
        Self { seed, counter, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// A sibling stream under the same seed.
    pub fn split(&self, counter: u64) -> Self {
        Self::new(self.seed, counter)
    }

    /// Draws one unit: `true` keeps it, `false` drops it (probability `rate`).
    #[inline]
    pub fn keep(&mut self, rate: f64) -> bool {
        self.rng.gen::<f64>() >= rate
    }
}

/// Mixes an index into a seed (SplitMix64), giving well separated per-sample seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Inverted dropout in place; returns the per-unit scale applied (0 or `1/(1-rate)`).
///
/// A rate of zero leaves `values` untouched and consumes no randomness.
pub fn apply_dropout<T: Scalar>(values: &mut [T], rate: f64, masks: &mut MaskStream) -> Vec<T> {
    if rate <= 0.0 {
        return vec![T::one(); values.len()];
    }
    let survivor = T::lit(1.0 / (1.0 - rate));
    values
        .iter_mut()
        .map(|v| {
            let scale = if masks.keep(rate) { survivor } else { T::zero() };
            *v *= scale;
            scale
        })
        .collect()
}
