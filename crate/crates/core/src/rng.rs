//! Seeded random streams with bit-stable output.
//!
//! ChaCha8 keyed by a 64-bit seed; floating draws are produced from raw
//! 64-bit words by an explicit mantissa shift, so streams do not depend on
//! distribution code elsewhere. Child seeds come from a SplitMix-style
//! mixer, which lets sweeps hand every task an independent stream without
//! coordination.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Deterministic random stream.
pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        // 53 mantissa bits, offset by half a step: values in (0, 1).
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Unit-rate exponential by inverse CDF.
    pub fn exponential(&mut self) -> f64 {
        -(-self.uniform_open()).ln_1p()
    }

    /// Uniform in (0, hi).
    pub fn uniform_in(&mut self, hi: f64) -> f64 {
        self.uniform_open() * hi
    }

    /// Index draw from cumulative weights (last entry is the total mass).
    pub fn categorical(&mut self, cumulative: &[f64]) -> usize {
        let total = *cumulative.last().expect("non-empty cumulative weights");
        let target = self.uniform_open() * total;
        match cumulative.binary_search_by(|c| c.partial_cmp(&target).expect("finite")) {
            Ok(k) | Err(k) => k.min(cumulative.len() - 1),
        }
    }
}

/// Fixed 64-bit mixer (SplitMix64 finalizer) for deriving child seeds from
/// a root seed and task indices. The derivation is part of the output
/// contract: re-running any task with the same root reproduces its stream.
pub fn derive_seed(root: u64, a: u64, b: u64) -> u64 {
    let mut z = root ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
