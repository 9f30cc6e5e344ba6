use alloc::vec::Vec;

use super::matching::{match_centers, Matching};
use crate::em::EmState;
use crate::math;
use crate::mixture::{separation, Dataset, MixtureModel};
use crate::two_round::TwoRoundResult;
use crate::{Error, Result};

/// Accumulation slack for the weight window comparison.
const WEIGHT_SLACK: f64 = 1e-12;

/// `(|S_i|/m)(1 − k e^{−c²n/8}) ≤ w_i ≤ |S_i|/m + e^{−c²n/8}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightWindow {
    pub weight: f64,
    /// `|S_i| / m`.
    pub cluster_fraction: f64,
    pub lower: f64,
    pub upper: f64,
}

impl WeightWindow {
    pub fn contains_weight(&self) -> bool {
        self.weight >= self.lower - WEIGHT_SLACK && self.weight <= self.upper + WEIGHT_SLACK
    }

    /// False when the window covers all of `[0, 1]`.
    pub fn is_informative(&self) -> bool {
        self.lower > 0.0 || self.upper < 1.0
    }
}

/// Window bounds for a cluster holding fraction `cluster_fraction` of the
/// data, in a `c`-separated `k`-mixture in `R^n`. `c = ∞` (a single
/// component) gives the degenerate window `[fraction, fraction]`.
pub fn weight_window(cluster_fraction: f64, k: usize, c: f64, n: usize) -> (f64, f64) {
    let tail = if c.is_infinite() {
        0.0
    } else {
        math::exp(-c * c * n as f64 / 8.0)
    };
    (cluster_fraction * (1.0 - k as f64 * tail), cluster_fraction + tail)
}

/// Round-1 centers that kept weight above `w_T`, checked against
/// `‖μ_i⁽¹⁾ − μ_origin‖ ≤ (1/4)·c·σ_origin·√n`, where the origin is the true
/// component of the data point the center was seeded from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Round1Check {
    pub checked: usize,
    pub within: usize,
    /// Largest `‖μ_i⁽¹⁾ − μ_origin‖ / (c·σ_origin·√n)` seen.
    pub worst_ratio: f64,
}

impl Round1Check {
    pub fn passed(&self) -> bool {
        self.within == self.checked
    }
}

/// Final-center accuracy against the truth, indexed by true component.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub matching: Matching,
    /// `‖μ̂_i − μ_i‖` for the estimate matched to component `i`.
    pub per_center_error: Vec<f64>,
    /// `‖mean(S_i) − μ_i‖`; NaN when `S_i` is empty.
    pub empirical_mean_error: Vec<f64>,
    pub excess_error: Vec<f64>,
    pub weight_windows: Vec<WeightWindow>,
    pub weight_bounds_ok: Vec<bool>,
    /// Separation used for the weight windows (∞ for `k = 1`).
    pub separation: f64,
    pub round1: Option<Round1Check>,
}

impl FitReport {
    /// Largest matched center error (the `d(·,·)` distance to the truth).
    pub fn max_error(&self) -> f64 {
        self.per_center_error.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_excess(&self) -> f64 {
        self.excess_error.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Every excess error is at most `tolerance` (false on NaN).
    pub fn excess_within(&self, tolerance: f64) -> bool {
        self.excess_error.iter().all(|&e| e <= tolerance)
    }

    pub fn all_weights_ok(&self) -> bool {
        self.weight_bounds_ok.iter().all(|&b| b)
    }

    pub fn weights_informative(&self) -> bool {
        self.weight_windows.iter().any(WeightWindow::is_informative)
    }
}

/// Scores a final state (exactly `k` centers) against a labeled sample.
pub fn evaluate_fit(final_state: &EmState, dataset: &Dataset, model: &MixtureModel) -> Result<FitReport> {
    let k = model.k();
    if final_state.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: final_state.len(),
        });
    }
    if final_state.dim() != model.dim() || dataset.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: final_state.dim(),
        });
    }
    let members = dataset.members(k)?;
    let m = dataset.len() as f64;
    let c = if k >= 2 {
        separation(model)?.min_separation
    } else {
        f64::INFINITY
    };
    let matching = match_centers(final_state.centers(), model)?;

    let mut per_center_error = Vec::with_capacity(k);
    let mut empirical_mean_error = Vec::with_capacity(k);
    let mut weight_windows = Vec::with_capacity(k);
    for (i, set) in members.iter().enumerate() {
        let e = matching.estimate_for(i);
        let truth = model.mean(i);
        per_center_error.push(math::dist(&final_state.centers()[e], truth));
        let emp = dataset
            .points()
            .mean_of(set.iter().copied())
            .map_or(f64::NAN, |mean| math::dist(&mean, truth));
        empirical_mean_error.push(emp);
        let fraction = set.len() as f64 / m;
        let (lower, upper) = weight_window(fraction, k, c, model.dim());
        weight_windows.push(WeightWindow {
            weight: final_state.weights()[e],
            cluster_fraction: fraction,
            lower,
            upper,
        });
    }
    let excess_error = per_center_error
        .iter()
        .zip(&empirical_mean_error)
        .map(|(a, b)| a - b)
        .collect();
    let weight_bounds_ok = weight_windows.iter().map(WeightWindow::contains_weight).collect();
    Ok(FitReport {
        matching,
        per_center_error,
        empirical_mean_error,
        excess_error,
        weight_windows,
        weight_bounds_ok,
        separation: c,
        round1: None,
    })
}

/// [`evaluate_fit`] on the final state plus the round-1 accuracy check.
pub fn evaluate_two_round(result: &TwoRoundResult, dataset: &Dataset, model: &MixtureModel) -> Result<FitReport> {
    let mut report = evaluate_fit(&result.final_state, dataset, model)?;
    report.round1 = check_round1(result, dataset, model)?;
    Ok(report)
}

/// `None` for single-component models (no separation).
pub fn check_round1(result: &TwoRoundResult, dataset: &Dataset, model: &MixtureModel) -> Result<Option<Round1Check>> {
    let k = model.k();
    if k < 2 {
        return Ok(None);
    }
    let labels = dataset.labels_for(k)?;
    let c = separation(model)?.min_separation;
    let sqrt_n = math::sqrt(model.dim() as f64);
    let mut check = Round1Check {
        checked: 0,
        within: 0,
        worst_ratio: 0.0,
    };
    let round1 = &result.after_round1;
    for (idx, &seed) in result.initial.seed_indices.iter().enumerate() {
        if round1.weights()[idx] <= result.threshold_used {
            continue;
        }
        let origin = labels[seed];
        let scale = c * model.sigma(origin) * sqrt_n;
        let ratio = math::dist(&round1.centers()[idx], model.mean(origin)) / scale;
        check.checked += 1;
        if ratio <= 0.25 {
            check.within += 1;
        }
        check.worst_ratio = check.worst_ratio.max(ratio);
    }
    Ok(Some(check))
}

/// Component pairs violating `c_ij² max(σ_i², σ_j²) ≥ |σ_i² − σ_j²|`
/// (one cluster nested inside another).
pub fn nesting_violations(model: &MixtureModel) -> Vec<(usize, usize)> {
    let k = model.k();
    let Ok(sep) = separation(model) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let (vi, vj) = (model.components()[i].variance, model.components()[j].variance);
            let cij = sep.get(i, j);
            if cij * cij * vi.max(vj) < (vi - vj).abs() {
                out.push((i, j));
            }
        }
    }
    out
}
