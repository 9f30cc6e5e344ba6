//! Empirical checks of the concentration, initialization, pruning and
//! accuracy guarantees behind the two-round procedure.
//!
//! The high-probability statements are exercised as seeded Monte-Carlo
//! pass rates (see [`run_trials`]); single runs can legitimately fail.

use alloc::format;

use crate::rng::child_seed;
use crate::{Error, Result};

mod concentration;
mod distances;
mod fit;
mod matching;
mod rounding;
mod seeding;

pub use concentration::{
    norm_concentration, pair_distance_concentration, NormConcentration, PairConcentration, TailCheck,
};
pub use distances::{check_corollary4, DistanceWindowReport, MAX_PAIRS};
pub use fit::{
    check_round1, evaluate_fit, evaluate_two_round, nesting_violations, weight_window, FitReport, Round1Check,
    WeightWindow,
};
pub use matching::{match_centers, match_to_means, Matching, EXACT_MATCHING_MAX_K};
pub use rounding::{round_labels, Rounding};
pub use seeding::{check_lemma5, SeedingReport};

/// Default concentration exponent α.
pub const DEFAULT_ALPHA: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    /// Window exponent: deviations are measured in units of `n^(1/2+α)`.
    pub alpha: f64,
    pub trials: usize,
    pub seed: u64,
}

impl DiagnosticsConfig {
    pub fn new(alpha: f64, trials: usize, seed: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::InvalidConfig(format!("alpha = {alpha} is outside (0, 1/2)")));
        }
        Ok(Self { alpha, trials, seed })
    }
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            trials: 20,
            seed: 0,
        }
    }
}

/// Violation count for one property over its applicable items.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PropertyCheck {
    pub applicable: u64,
    pub violations: u64,
}

impl PropertyCheck {
    pub fn fraction(&self) -> f64 {
        if self.applicable == 0 {
            0.0
        } else {
            self.violations as f64 / self.applicable as f64
        }
    }

    /// No applicable items ("no applicable pairs").
    pub fn is_vacuous(&self) -> bool {
        self.applicable == 0
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub(crate) fn record(&mut self, ok: bool) {
        self.applicable += 1;
        if !ok {
            self.violations += 1;
        }
    }
}

/// Runs `trials` seeded trials, trial `t` receiving
/// `child_seed(seed, "trial", t)`, and counts those returning `true`.
pub fn run_trials<F>(trials: usize, seed: u64, mut trial: F) -> Result<usize>
where
    F: FnMut(u64) -> Result<bool>,
{
    let mut passes = 0;
    for t in 0..trials {
        if trial(child_seed(seed, "trial", t as u64))? {
            passes += 1;
        }
    }
    Ok(passes)
}
