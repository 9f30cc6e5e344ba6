use alloc::vec::Vec;

use crate::math;
use crate::rng::Rng;
use crate::{Error, Result};

/// Empirical tail `P(|‖X‖² − n| ≥ εn)` against `2 exp(−nε²/24)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCheck {
    pub epsilon: f64,
    pub empirical: f64,
    pub bound: f64,
}

impl TailCheck {
    pub fn ok(&self) -> bool {
        self.empirical <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormConcentration {
    pub n: usize,
    pub draws: usize,
    /// Mean of `‖X‖² / n`.
    pub mean_ratio: f64,
    pub tails: Vec<TailCheck>,
    /// Fraction of draws outside `[n − n^(1/2+α), n + n^(1/2+α)]`.
    pub outside_alpha_window: f64,
    /// `2 exp(−n^(2α)/24)`.
    pub alpha_window_bound: f64,
}

/// Squared norms of `draws` samples from `N(0, I_n)`.
pub fn norm_concentration(
    n: usize,
    draws: usize,
    epsilons: &[f64],
    alpha: f64,
    seed: u64,
) -> Result<NormConcentration> {
    if n == 0 || draws == 0 {
        return Err(Error::InvalidConfig("n and draws must be positive".into()));
    }
    if let Some(e) = epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(Error::InvalidConfig(alloc::format!("epsilon {e} is outside (0, 1)")));
    }
    let nf = n as f64;
    let mut rng = Rng::new(seed);
    let sq: Vec<f64> = (0..draws)
        .map(|_| (0..n).map(|_| rng.standard_normal()).map(|z| z * z).sum())
        .collect();
    let df = draws as f64;
    let mean_ratio = sq.iter().sum::<f64>() / df / nf;
    let tails = epsilons
        .iter()
        .map(|&epsilon| TailCheck {
            epsilon,
            empirical: sq.iter().filter(|&&s| (s - nf).abs() >= epsilon * nf).count() as f64 / df,
            bound: 2.0 * math::exp(-nf * epsilon * epsilon / 24.0),
        })
        .collect();
    let half_width = math::powf(nf, 0.5 + alpha);
    let outside = sq.iter().filter(|&&s| (s - nf).abs() > half_width).count() as f64 / df;
    Ok(NormConcentration {
        n,
        draws,
        mean_ratio,
        tails,
        outside_alpha_window: outside,
        alpha_window_bound: 2.0 * math::exp(-math::powf(nf, 2.0 * alpha) / 24.0),
    })
}

/// Pairs `X ~ N(μ_i, σ_i²I)`, `Y ~ N(μ_j, σ_j²I)` whose squared distance
/// falls outside
/// `‖μ_i−μ_j‖² + (σ_i²+σ_j²)(n ± n^(1/2+α)) ± 2‖μ_i−μ_j‖√(σ_i²+σ_j²)·n^α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairConcentration {
    pub draws: usize,
    pub outside: f64,
    /// `2 exp(−n^(2α)/24) + exp(−n^(2α)/2)`.
    pub bound: f64,
}

pub fn pair_distance_concentration(
    mean_i: &[f64],
    var_i: f64,
    mean_j: &[f64],
    var_j: f64,
    draws: usize,
    alpha: f64,
    seed: u64,
) -> Result<PairConcentration> {
    if mean_i.len() != mean_j.len() {
        return Err(Error::DimensionMismatch {
            expected: mean_i.len(),
            found: mean_j.len(),
        });
    }
    if draws == 0 {
        return Err(Error::InvalidConfig("draws must be positive".into()));
    }
    let n = mean_i.len();
    let nf = n as f64;
    let (si, sj) = (math::sqrt(var_i), math::sqrt(var_j));
    let gap = math::dist(mean_i, mean_j);
    let vsum = var_i + var_j;
    let center = gap * gap + vsum * nf;
    let width = vsum * math::powf(nf, 0.5 + alpha) + 2.0 * gap * math::sqrt(vsum) * math::powf(nf, alpha);
    let mut rng = Rng::new(seed);
    let mut outside = 0usize;
    let mut x = alloc::vec![0.0; n];
    for _ in 0..draws {
        for (d, mu) in x.iter_mut().zip(mean_i) {
            *d = mu + si * rng.standard_normal();
        }
        let mut s = 0.0;
        for (d, mu) in x.iter().zip(mean_j) {
            let y = mu + sj * rng.standard_normal();
            s += (d - y) * (d - y);
        }
        if (s - center).abs() > width {
            outside += 1;
        }
    }
    let n2a = math::powf(nf, 2.0 * alpha);
    Ok(PairConcentration {
        draws,
        outside: outside as f64 / draws as f64,
        bound: 2.0 * math::exp(-n2a / 24.0) + math::exp(-n2a / 2.0),
    })
}
