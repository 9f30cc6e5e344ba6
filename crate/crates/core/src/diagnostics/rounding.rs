//! Fractional-to-binary label rounding that never shrinks the weighted
//! average's norm and loses at most one unit of total weight.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Relative slack on the hyperplane test `z(y) ≥ ‖A‖`, so a point lying on
/// the hyperplane is not misplaced by rounding.
const HYPERPLANE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Rounding {
    pub labels: Vec<bool>,
    /// Transfer iterations performed on the lower half-space.
    pub iterations: usize,
    pub fractional_sum: f64,
    pub binary_sum: usize,
    /// `‖Σ f(y)y / Σ f(y)‖`.
    pub fractional_norm: f64,
    /// `‖Σ g(y)y / Σ g(y)‖`, `None` when no label is set.
    pub binary_norm: Option<f64>,
}

impl Rounding {
    /// `1 + Σg ≥ Σf`.
    pub fn count_ok(&self) -> bool {
        1.0 + self.binary_sum as f64 >= self.fractional_sum - 1e-12 * self.fractional_sum.max(1.0)
    }

    /// Norm does not decrease (up to `rel_tol` relative). `None` when the
    /// binary average is undefined (vacuous).
    pub fn norm_ok(&self, rel_tol: f64) -> Option<bool> {
        self.binary_norm
            .map(|b| b >= self.fractional_norm - rel_tol * self.fractional_norm.max(1e-300))
    }
}

/// Rounds fractional labels `f(y) ∈ [0, 1]` to binary ones.
///
/// With `A = Σ f(y)y / Σ f(y)` and `z(y) = ⟨y, A⟩/‖A‖`: points with
/// `z ≥ ‖A‖` get label 1. Among the rest, weight is repeatedly moved from the
/// lowest-`z` point with positive weight to the highest-`z` point with
/// weight below 1, until at most one fractional weight remains; that point
/// is dropped. If `A = 0` every point with `f > 0` gets label 1.
pub fn round_labels(points: &[Vec<f64>], f: &[f64]) -> Result<Rounding> {
    if points.len() != f.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            found: f.len(),
        });
    }
    let d = points.first().map_or(0, Vec::len);
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: p.len(),
        });
    }
    if let Some(v) = f.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidData(format!("fractional label {v} outside [0, 1]")));
    }
    let fractional_sum: f64 = f.iter().sum();
    if !(fractional_sum > 0.0) {
        return Err(Error::InvalidData("all fractional labels are zero".into()));
    }

    let mut a = vec![0.0; d];
    for (p, &w) in points.iter().zip(f) {
        for (acc, v) in a.iter_mut().zip(p) {
            *acc += w * v;
        }
    }
    a.iter_mut().for_each(|v| *v /= fractional_sum);
    let a_sq = math::sq_norm(&a);
    let fractional_norm = math::sqrt(a_sq);

    let (labels, iterations) = if a_sq == 0.0 {
        (f.iter().map(|&w| w > 0.0).collect(), 0)
    } else {
        round_along(points, f, &a, a_sq)?
    };

    let binary_sum = labels.iter().filter(|&&g| g).count();
    let binary_norm = (binary_sum > 0).then(|| {
        let mut avg = vec![0.0; d];
        for (p, _) in points.iter().zip(&labels).filter(|(_, &g)| g) {
            for (acc, v) in avg.iter_mut().zip(p) {
                *acc += v;
            }
        }
        math::norm(&avg) / binary_sum as f64
    });
    Ok(Rounding {
        labels,
        iterations,
        fractional_sum,
        binary_sum,
        fractional_norm,
        binary_norm,
    })
}

fn round_along(points: &[Vec<f64>], f: &[f64], a: &[f64], a_sq: f64) -> Result<(Vec<bool>, usize)> {
    // Compare ⟨y, A⟩ with ‖A‖² instead of z(y) with ‖A‖.
    let proj: Vec<f64> = points.iter().map(|p| math::dot(p, a)).collect();
    let threshold = a_sq * (1.0 - HYPERPLANE_SLACK);
    let mut g: Vec<f64> = f.to_vec();
    let mut lower = Vec::new();
    for (i, &z) in proj.iter().enumerate() {
        if z >= threshold {
            g[i] = 1.0;
        } else {
            lower.push(i);
        }
    }

    let is_fractional = |w: f64| w > 0.0 && w < 1.0;
    let cap = lower.len();
    let mut iterations = 0;
    loop {
        if lower.iter().filter(|&&i| is_fractional(g[i])).count() <= 1 {
            break;
        }
        if iterations >= cap {
            return Err(Error::Internal(format!(
                "label rounding exceeded {cap} transfer iterations"
            )));
        }
        // u: highest z with g < 1 (ties: lowest index);
        // v: lowest z with g > 0 (ties: highest index).
        let mut u: Option<usize> = None;
        let mut v: Option<usize> = None;
        for &i in &lower {
            if g[i] < 1.0 && u.is_none_or(|b| proj[i] > proj[b]) {
                u = Some(i);
            }
            if g[i] > 0.0 && v.is_none_or(|b| proj[i] <= proj[b]) {
                v = Some(i);
            }
        }
        let (Some(u), Some(v)) = (u, v) else {
            return Err(Error::Internal("no transfer pair among fractional labels".into()));
        };
        if u == v {
            return Err(Error::Internal("transfer pair collapsed to one point".into()));
        }
        let delta = g[v].min(1.0 - g[u]);
        g[u] += delta;
        g[v] -= delta;
        // Snap the saturated endpoint exactly.
        if g[v] < 1e-15 {
            g[v] = 0.0;
        }
        if 1.0 - g[u] < 1e-15 {
            g[u] = 1.0;
        }
        iterations += 1;
    }
    // The one remaining fractional point (if any) is dropped.
    let labels = g.iter().map(|&w| w >= 1.0).collect();
    Ok((labels, iterations))
}
