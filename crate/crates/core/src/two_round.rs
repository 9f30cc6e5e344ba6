//! The two-round procedure: seed `l` centers from the data, run one EM
//! round, prune to `k` centers, reset weights and variance, and run one
//! final EM round.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::em::{self, EmState, VarianceMode, Variances};
use crate::math;
use crate::mixture::Points;
use crate::rng::{child_seed, Rng};
use crate::{Error, Result};

/// Multiplier in `l = ⌈(C / w_min) ln k⌉`.
pub const DEFAULT_L_CONSTANT: f64 = 4.0;

/// Initial center count: `max(k + 1, ⌈(4 / w_min) ln k⌉)`.
pub fn choose_l(k: usize, w_min: f64) -> Result<usize> {
    choose_l_with_constant(k, w_min, DEFAULT_L_CONSTANT)
}

pub fn choose_l_with_constant(k: usize, w_min: f64, constant: f64) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if !(w_min > 0.0) || w_min > 1.0 / k as f64 {
        return Err(Error::InvalidConfig(format!("w_min = {w_min} is outside (0, 1/{k}]")));
    }
    if !(constant > 0.0) || !constant.is_finite() {
        return Err(Error::InvalidConfig(format!("constant {constant} must be positive")));
    }
    // ln 1 = 0, so a single cluster gets the k + 1 floor.
    let raw = math::ceil(constant / w_min * math::ln(k as f64));
    Ok((k + 1).max(raw as usize))
}

/// Starvation threshold `w_T = 1/(2l) + 2/m`.
pub fn pruning_threshold(l: usize, m: usize) -> f64 {
    1.0 / (2.0 * l as f64) + 2.0 / m as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoRoundConfig {
    pub k: usize,
    pub l: usize,
    pub variance_mode: VarianceMode,
    /// Lower bound on the mixing weights, used only to choose `l`.
    pub w_min_hint: Option<f64>,
    pub seed: u64,
}

impl TwoRoundConfig {
    pub fn new(k: usize, l: usize, variance_mode: VarianceMode, seed: u64) -> Self {
        Self {
            k,
            l,
            variance_mode,
            w_min_hint: None,
            seed,
        }
    }

    /// `l` from [`choose_l`] with the given weight bound.
    pub fn with_weight_bound(k: usize, w_min: f64, variance_mode: VarianceMode, seed: u64) -> Result<Self> {
        let l = choose_l(k, w_min)?;
        Ok(Self {
            k,
            l,
            variance_mode,
            w_min_hint: Some(w_min),
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.l < self.k {
            return Err(Error::InvalidConfig(format!("l = {} must be ≥ k = {}", self.l, self.k)));
        }
        if self.l < 2 {
            return Err(Error::InvalidConfig("l must be at least 2".into()));
        }
        if let Some(w) = self.w_min_hint {
            if !(w > 0.0) || w > 1.0 / self.k as f64 {
                return Err(Error::InvalidConfig(format!("w_min_hint = {w} is outside (0, 1/k]")));
            }
        }
        Ok(())
    }
}

/// Starting state plus the data indices the centers were copied from.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialEstimates {
    pub state: EmState,
    pub seed_indices: Vec<usize>,
}

/// `l` distinct data points as centers, weights `1/l`, and the nearest-pair
/// variance initializer (global minimum in common mode, per-center nearest
/// neighbour otherwise).
///
/// Seeds are drawn without replacement. A seed that coincides with an
/// earlier one is redrawn; after `m` redraws the data is reported as
/// degenerate.
pub fn init(points: &Points, cfg: &TwoRoundConfig) -> Result<InitialEstimates> {
    cfg.validate()?;
    let m = points.len();
    let l = cfg.l;
    if m < l {
        return Err(Error::InvalidConfig(format!("{m} points cannot supply l = {l} seeds")));
    }
    let mut rng = Rng::new(child_seed(cfg.seed, "init", 0));
    let mut indices = rng.sample_indices(m, l);
    let mut attempts = 0usize;
    while let Some(j) = first_collision(points, &indices) {
        loop {
            if attempts >= m {
                return Err(Error::DegenerateData(format!(
                    "could not find {l} distinct seed points after {m} redraws"
                )));
            }
            attempts += 1;
            let candidate = rng.below(m);
            if !indices.contains(&candidate) {
                indices[j] = candidate;
                break;
            }
        }
    }
    let state = init_from_indices(points, &indices, cfg.variance_mode)?;
    Ok(InitialEstimates {
        state,
        seed_indices: indices,
    })
}

fn first_collision(points: &Points, indices: &[usize]) -> Option<usize> {
    for j in 1..indices.len() {
        for i in 0..j {
            if math::sq_dist(points.row(indices[i]), points.row(indices[j])) == 0.0 {
                return Some(j);
            }
        }
    }
    None
}

/// Initial state from explicit seed indices.
pub fn init_from_indices(points: &Points, indices: &[usize], mode: VarianceMode) -> Result<EmState> {
    let l = indices.len();
    if l < 2 {
        return Err(Error::InvalidConfig("at least two seeds are needed".into()));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= points.len()) {
        return Err(Error::InvalidConfig(format!("seed index {bad} out of range")));
    }
    let centers: Vec<Vec<f64>> = indices.iter().map(|&i| points.row(i).to_vec()).collect();
    let two_n = 2.0 * points.dim() as f64;
    let mut nearest = vec![f64::INFINITY; l];
    for i in 0..l {
        for j in i + 1..l {
            let d = math::sq_dist(&centers[i], &centers[j]);
            nearest[i] = nearest[i].min(d);
            nearest[j] = nearest[j].min(d);
        }
    }
    if nearest.contains(&0.0) {
        return Err(Error::DegenerateData("two seeds coincide".into()));
    }
    let variances = match mode {
        VarianceMode::Common => Variances::Common(nearest.iter().copied().fold(f64::INFINITY, f64::min) / two_n),
        VarianceMode::PerCenter => Variances::PerCenter(nearest.iter().map(|d| d / two_n).collect()),
    };
    EmState::new(centers, vec![1.0 / l as f64; l], variances)
}

/// Farthest-first traversal over `candidates` starting at `first`: each
/// step adds the candidate whose distance to the selected set (minimum over
/// selected) is largest, ties to the earliest candidate in the slice.
pub fn farthest_first<F>(candidates: &[usize], count: usize, first: usize, dist: F) -> Vec<usize>
where
    F: Fn(usize, usize) -> f64,
{
    let count = count.min(candidates.len());
    let mut selected = Vec::with_capacity(count);
    if count == 0 {
        return selected;
    }
    selected.push(first);
    let mut gap: Vec<f64> = candidates
        .iter()
        .map(|&c| if c == first { f64::NEG_INFINITY } else { dist(c, first) })
        .collect();
    while selected.len() < count {
        let mut best: Option<usize> = None;
        for (pos, &g) in gap.iter().enumerate() {
            if g == f64::NEG_INFINITY {
                continue;
            }
            if best.is_none_or(|b| g > gap[b]) {
                best = Some(pos);
            }
        }
        let Some(pos) = best else { break };
        let chosen = candidates[pos];
        selected.push(chosen);
        gap[pos] = f64::NEG_INFINITY;
        for (p, g) in gap.iter_mut().enumerate() {
            if *g != f64::NEG_INFINITY {
                *g = g.min(dist(candidates[p], chosen));
            }
        }
    }
    selected
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pruned {
    /// `k` centers in selection order, weights `1/k`, variance reset to the
    /// initial estimate(s).
    pub state: EmState,
    /// Round-1 indices of the chosen centers, in selection order.
    pub selected: Vec<usize>,
    /// Round-1 indices with weight at least `w_T`.
    pub survivors: Vec<usize>,
}

/// Drops centers with weight below `w_t`, then keeps `k` of the rest by
/// farthest-first traversal, starting from the heaviest survivor.
///
/// Common mode uses Euclidean distance; per-center mode uses
/// `‖μ_i − μ_j‖ / (σ_i⁽⁰⁾ + σ_j⁽⁰⁾)` with the initial standard deviations
/// taken from `initial`.
pub fn prune(after_round1: &EmState, initial: &EmState, k: usize, w_t: f64, mode: VarianceMode) -> Result<Pruned> {
    if initial.len() != after_round1.len() {
        return Err(Error::DimensionMismatch {
            expected: after_round1.len(),
            found: initial.len(),
        });
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let weights = after_round1.weights();
    let survivors: Vec<usize> = (0..after_round1.len()).filter(|&i| weights[i] >= w_t).collect();
    if survivors.len() < k {
        return Err(Error::PruningStarved {
            survivors: survivors.len(),
            k,
        });
    }
    let mut first = survivors[0];
    for &i in &survivors[1..] {
        if weights[i] > weights[first] {
            first = i;
        }
    }
    let centers = after_round1.centers();
    let sigma0: Vec<f64> = (0..initial.len()).map(|i| math::sqrt(initial.variance(i))).collect();
    let selected = match mode {
        VarianceMode::Common => farthest_first(&survivors, k, first, |a, b| math::dist(&centers[a], &centers[b])),
        VarianceMode::PerCenter => farthest_first(&survivors, k, first, |a, b| {
            math::dist(&centers[a], &centers[b]) / (sigma0[a] + sigma0[b])
        }),
    };
    let variances = match mode {
        VarianceMode::Common => Variances::Common(initial.variance(0)),
        VarianceMode::PerCenter => Variances::PerCenter(selected.iter().map(|&i| initial.variance(i)).collect()),
    };
    let state = EmState::new(
        selected.iter().map(|&i| centers[i].clone()).collect(),
        vec![1.0 / k as f64; k],
        variances,
    )?;
    Ok(Pruned {
        state,
        selected,
        survivors,
    })
}

/// Every intermediate state of a two-round run.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoRoundResult {
    pub initial: InitialEstimates,
    pub after_round1: EmState,
    pub pruned: Pruned,
    /// Output of the second EM round: exactly `k` centers.
    pub final_state: EmState,
    pub threshold_used: f64,
}

/// Init, one EM round, prune, one EM round.
pub fn two_round_em(points: &Points, cfg: &TwoRoundConfig) -> Result<TwoRoundResult> {
    cfg.validate()?;
    let m = points.len();
    if m < cfg.l.max(2 * cfg.k) {
        return Err(Error::InvalidConfig(format!(
            "m = {m} is below max(l, 2k) = {}",
            cfg.l.max(2 * cfg.k)
        )));
    }
    let initial = init(points, cfg)?;
    let after_round1 = em::em_round(points, &initial.state)?;
    let threshold_used = pruning_threshold(cfg.l, m);
    let pruned = prune(&after_round1, &initial.state, cfg.k, threshold_used, cfg.variance_mode)?;
    let final_state = em::em_round(points, &pruned.state)?;
    Ok(TwoRoundResult {
        initial,
        after_round1,
        pruned,
        final_state,
        threshold_used,
    })
}
