use alloc::vec;
use alloc::vec::Vec;

use crate::em::Variances;
use crate::math;
use crate::mixture::{Dataset, MixtureModel};
use crate::two_round::InitialEstimates;
use crate::Result;

/// Initial-condition checks on a seeded start:
/// (a) every component supplied at least one seed,
/// (b) component `i` supplied at most `(5/4)·l·w_i` seeds,
/// (c) `σ⁽⁰⁾² = σ²(1 ± n^(−1/2+α))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedingReport {
    pub seed_counts: Vec<usize>,
    pub seed_count_bounds: Vec<f64>,
    /// Relative error of each initial variance against the variance of the
    /// component its seed came from (one entry in common mode).
    pub variance_relative_errors: Vec<f64>,
    /// `n^(−1/2+α)`.
    pub variance_window: f64,
}

impl SeedingReport {
    pub fn all_covered(&self) -> bool {
        self.seed_counts.iter().all(|&c| c > 0)
    }

    pub fn seed_counts_ok(&self) -> bool {
        self.seed_counts
            .iter()
            .zip(&self.seed_count_bounds)
            .all(|(&c, &b)| c as f64 <= b)
    }

    pub fn variance_ok(&self) -> bool {
        self.variance_relative_errors
            .iter()
            .all(|e| e.abs() <= self.variance_window)
    }
}

/// In common mode the reference variance is the model's common variance if
/// it has one, else the weighted mean of component variances.
pub fn check_lemma5(
    init: &InitialEstimates,
    dataset: &Dataset,
    model: &MixtureModel,
    alpha: f64,
) -> Result<SeedingReport> {
    let k = model.k();
    let labels = dataset.labels_for(k)?;
    let l = init.seed_indices.len();
    let mut seed_counts = vec![0usize; k];
    for &s in &init.seed_indices {
        seed_counts[labels[s]] += 1;
    }
    let seed_count_bounds = model.components().iter().map(|c| 1.25 * l as f64 * c.weight).collect();
    let variance_relative_errors = match init.state.variances() {
        Variances::Common(v0) => {
            let reference = model
                .common_variance()
                .unwrap_or_else(|| model.components().iter().map(|c| c.weight * c.variance).sum());
            vec![v0 / reference - 1.0]
        }
        Variances::PerCenter(vs) => init
            .seed_indices
            .iter()
            .zip(vs)
            .map(|(&s, v0)| v0 / model.components()[labels[s]].variance - 1.0)
            .collect(),
    };
    Ok(SeedingReport {
        seed_counts,
        seed_count_bounds,
        variance_relative_errors,
        variance_window: math::powf(model.dim() as f64, -0.5 + alpha),
    })
}
