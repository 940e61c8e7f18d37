//! Reproducible uniform sampling of initial tracking errors.
//!
//! The generator is xoshiro256** seeded through SplitMix64 (the
//! `seed_from_u64` convention of the xoshiro reference code). A draw maps the
//! top 53 bits of one output word to the open interval (0, 1) as
//! `((w >> 11) + 0.5) * 2^-53`, then affinely to `(lo, hi)`.

use alloc::vec::Vec;

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::dynamics::ErrorState;

/// Bounds of the initial-error box: `x_e, y_e` in (-2, 2) m and `theta_e` in
/// (-0.2, 0.2) rad.
pub const INITIAL_ERROR_BOX: [(f64, f64); 3] = [(-2.0, 2.0), (-2.0, 2.0), (-0.2, 0.2)];

/// Default Monte Carlo batch size.
pub const DEFAULT_BATCH_SIZE: usize = 1000;

#[derive(Debug, Clone)]
pub struct UniformSource {
    rng: Xoshiro256StarStar,
}

impl UniformSource {
    pub fn new(seed: u64) -> Self {
        Self { rng: Xoshiro256StarStar::seed_from_u64(seed) }
    }

    /// A draw strictly inside `(0, 1)`.
    pub fn unit(&mut self) -> f64 {
        let w = self.rng.next_u64() >> 11;
        (w as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }
}

/// `n` independent initial errors drawn uniformly from [`INITIAL_ERROR_BOX`].
pub fn sample_initial_conditions(n: usize, seed: u64) -> Vec<ErrorState> {
    let mut src = UniformSource::new(seed);
    (0..n)
        .map(|_| {
            let [x, y, th] = INITIAL_ERROR_BOX.map(|(lo, hi)| src.uniform(lo, hi));
            ErrorState::new(x, y, th)
        })
        .collect()
}
