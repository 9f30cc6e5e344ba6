//! Seeding and random variate generation.
//!
//! Generator: `ChaCha8Rng` (rand_chacha 0.9) seeded through
//! `SeedableRng::seed_from_u64`. Normals: Marsaglia's polar method, versioned
//! as [`NORMAL_ALGORITHM`]; the second variate of each accepted pair is cached
//! and returned by the next call.
//!
//! Seed splitting: a root seed never feeds two consumers directly. Every
//! consumer derives its own child with [`child_seed`]`(root, purpose, index)`,
//! where `purpose` is a short tag such as `"sample"`, `"init"` or `"trial"` and
//! `index` distinguishes repeated consumers (trial number, cell number).

use alloc::vec::Vec;

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math;

/// Identifies the normal-variate algorithm; bump on any change that alters
/// the generated stream.
pub const NORMAL_ALGORITHM: &str = "chacha8-polar-v1";

const fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Purpose-tagged child seed.
pub fn child_seed(root: u64, purpose: &str, index: u64) -> u64 {
    splitmix64(splitmix64(root ^ fnv1a(purpose)) ^ splitmix64(index.wrapping_add(1)))
}

/// Seeded random source used throughout the crate.
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform integer in `[0, upper)`.
    pub fn below(&mut self, upper: usize) -> usize {
        self.inner.random_range(0..upper)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = math::sqrt(-2.0 * math::ln(s) / s);
                self.spare = Some(v * factor);
                return u * factor;
            }
        }
    }

    /// `amount` distinct indices from `0..length`, uniformly without
    /// replacement, in sampling order.
    pub fn sample_indices(&mut self, length: usize, amount: usize) -> Vec<usize> {
        rand::seq::index::sample(&mut self.inner, length, amount).into_vec()
    }

    /// Index drawn with probability proportional to `weights` (which must
    /// sum to 1 up to rounding). Falls back to the last index on round-off.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        weights.len() - 1
    }
}
