use alloc::vec::Vec;

use super::{DiagnosticsConfig, PropertyCheck};
use crate::math;
use crate::mixture::{separation, Dataset, MixtureModel};
use crate::rng::{child_seed, Rng};
use crate::{Error, Result};

/// Pair checks look at no more than this many pairs; larger data sets are
/// subsampled without replacement.
pub const MAX_PAIRS: usize = 1_000_000;

/// Distance-window properties of a labeled sample from a common-variance
/// mixture, with `W = n^(1/2+α)`:
///
/// 1. same cluster: `‖x−y‖² = 2σ²n ± 2σ²W`
/// 2. clusters `i ≠ j`: `‖x−y‖² = (2+c_ij²)σ²n ± (2+2√2·c_ij)σ²W`
/// 3. own center: `‖y−μ_j‖² = σ²n ± σ²W`; other centers:
///    `‖y−μ_i‖² = (1+c_ij²)σ²n ± (1+2c_ij)σ²W`
/// 4. `|S_i| ≥ (3/4)·m·w_i`
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceWindowReport {
    pub intra_pairs: PropertyCheck,
    pub inter_pairs: PropertyCheck,
    pub own_center: PropertyCheck,
    pub other_centers: PropertyCheck,
    pub cluster_sizes: PropertyCheck,
    /// Largest same-cluster squared distance among examined pairs.
    pub max_intra_sq: f64,
    /// Smallest cross-cluster squared distance among examined pairs.
    pub min_inter_sq: f64,
    pub pairs_examined: usize,
    pub subsampled: bool,
}

impl DistanceWindowReport {
    pub fn all_passed(&self) -> bool {
        [
            self.intra_pairs,
            self.inter_pairs,
            self.own_center,
            self.other_centers,
            self.cluster_sizes,
        ]
        .iter()
        .all(PropertyCheck::passed)
    }

    /// Every examined intra-cluster distance is strictly below every
    /// examined inter-cluster distance.
    pub fn distance_split_ok(&self) -> bool {
        self.max_intra_sq < self.min_inter_sq
    }
}

pub fn check_corollary4(
    dataset: &Dataset,
    model: &MixtureModel,
    cfg: &DiagnosticsConfig,
) -> Result<DistanceWindowReport> {
    let k = model.k();
    let labels = dataset.labels_for(k)?;
    if dataset.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: dataset.dim(),
        });
    }
    let sigma2 = model
        .common_variance()
        .ok_or_else(|| Error::InvalidModel("a common-variance model is required".into()))?;
    let points = dataset.points();
    let m = points.len();
    let nf = model.dim() as f64;
    let w = math::powf(nf, 0.5 + cfg.alpha);
    let sqrt_n = math::sqrt(nf);
    let sigma = math::sqrt(sigma2);
    let c = |i: usize, j: usize| math::dist(model.mean(i), model.mean(j)) / (sigma * sqrt_n);
    if k >= 2 {
        // Also validates that the means are distinct enough to form pairs.
        separation(model)?;
    }

    let mut report = DistanceWindowReport {
        intra_pairs: PropertyCheck::default(),
        inter_pairs: PropertyCheck::default(),
        own_center: PropertyCheck::default(),
        other_centers: PropertyCheck::default(),
        cluster_sizes: PropertyCheck::default(),
        max_intra_sq: f64::NEG_INFINITY,
        min_inter_sq: f64::INFINITY,
        pairs_examined: 0,
        subsampled: false,
    };

    let check_pair = |a: usize, b: usize, report: &mut DistanceWindowReport| {
        let d2 = math::sq_dist(points.row(a), points.row(b));
        let (i, j) = (labels[a], labels[b]);
        if i == j {
            report.max_intra_sq = report.max_intra_sq.max(d2);
            let ok = (d2 - 2.0 * sigma2 * nf).abs() <= 2.0 * sigma2 * w;
            report.intra_pairs.record(ok);
        } else {
            report.min_inter_sq = report.min_inter_sq.min(d2);
            let cij = c(i, j);
            let center = (2.0 + cij * cij) * sigma2 * nf;
            let width = (2.0 + 2.0 * core::f64::consts::SQRT_2 * cij) * sigma2 * w;
            report.inter_pairs.record((d2 - center).abs() <= width);
        }
        report.pairs_examined += 1;
    };

    let total = m * (m.saturating_sub(1)) / 2;
    if total <= MAX_PAIRS {
        for a in 0..m {
            for b in a + 1..m {
                check_pair(a, b, &mut report);
            }
        }
    } else {
        report.subsampled = true;
        // Row a holds pairs (a, a+1..m); starts[a] is its first linear index.
        let starts: Vec<usize> = (0..m).map(|a| a * m - a * (a + 1) / 2).collect();
        let mut rng = Rng::new(child_seed(cfg.seed, "pairs", 0));
        let mut picks = rng.sample_indices(total, MAX_PAIRS);
        picks.sort_unstable();
        for p in picks {
            let a = starts.partition_point(|&s| s <= p) - 1;
            let b = a + 1 + (p - starts[a]);
            check_pair(a, b, &mut report);
        }
    }

    for (y, &j) in labels.iter().enumerate() {
        let row = points.row(y);
        for i in 0..k {
            let d2 = math::sq_dist(row, model.mean(i));
            if i == j {
                report.own_center.record((d2 - sigma2 * nf).abs() <= sigma2 * w);
            } else {
                let cij = c(i, j);
                let center = (1.0 + cij * cij) * sigma2 * nf;
                let width = (1.0 + 2.0 * cij) * sigma2 * w;
                report.other_centers.record((d2 - center).abs() <= width);
            }
        }
    }

    let mut sizes = alloc::vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    for (i, &s) in sizes.iter().enumerate() {
        report
            .cluster_sizes
            .record(s as f64 >= 0.75 * m as f64 * model.components()[i].weight);
    }
    Ok(report)
}
