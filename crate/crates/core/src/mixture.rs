//! Spherical Gaussian mixtures, data sets, sampling and separation.

use alloc::format;
use alloc::vec::Vec;

use crate::math;
use crate::rng::Rng;
use crate::{Error, Result};

/// One component `weight · N(mean, variance · I_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub variance: f64,
}

/// Validated mixture of spherical Gaussians in `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    dim: usize,
    components: Vec<Component>,
}

impl MixtureModel {
    /// Checks: at least one component, `dim > 0`, weights positive and
    /// summing to 1 within 1e-12, variances positive and finite, means of
    /// length `dim`.
    pub fn new(dim: usize, components: Vec<Component>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        if components.is_empty() {
            return Err(Error::InvalidModel("no components".into()));
        }
        let mut total = 0.0;
        for (i, c) in components.iter().enumerate() {
            if !(c.weight > 0.0) || !c.weight.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "component {i}: weight {} is not strictly positive",
                    c.weight
                )));
            }
            if !(c.variance > 0.0) || !c.variance.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "component {i}: variance {} is not strictly positive",
                    c.variance
                )));
            }
            if c.mean.len() != dim {
                return Err(Error::InvalidModel(format!(
                    "component {i}: mean has dimension {}, expected {dim}",
                    c.mean.len()
                )));
            }
            if c.mean.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel(format!("component {i}: non-finite mean")));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { dim, components })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn mean(&self, i: usize) -> &[f64] {
        &self.components[i].mean
    }

    pub fn sigma(&self, i: usize) -> f64 {
        math::sqrt(self.components[i].variance)
    }

    /// `Some(σ²)` when every component shares the same variance (to 1e-12
    /// relative).
    pub fn common_variance(&self) -> Option<f64> {
        let v0 = self.components[0].variance;
        self.components
            .iter()
            .all(|c| (c.variance - v0).abs() <= 1e-12 * v0)
            .then_some(v0)
    }

    /// Same model with every mean moved by `shift`.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: shift.len(),
            });
        }
        let components = self
            .components
            .iter()
            .map(|c| Component {
                weight: c.weight,
                mean: c.mean.iter().zip(shift).map(|(a, b)| a + b).collect(),
                variance: c.variance,
            })
            .collect();
        Ok(Self {
            dim: self.dim,
            components,
        })
    }
}

/// `m × n` matrix of points, row-major, one point per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidData("dimension must be positive".into()));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidData(format!(
                "{} values do not form a non-empty matrix with {dim} columns",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite coordinate".into()));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        Self::new(dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: shift.len(),
            });
        }
        let data = self
            .rows()
            .flat_map(|r| r.iter().zip(shift).map(|(a, b)| a + b))
            .collect();
        Ok(Self { dim: self.dim, data })
    }

    /// Coordinate-wise mean of the selected rows, summed in index order.
    pub fn mean_of(&self, indices: impl IntoIterator<Item = usize>) -> Option<Vec<f64>> {
        let mut acc = alloc::vec![0.0; self.dim];
        let mut count = 0usize;
        for i in indices {
            for (a, x) in acc.iter_mut().zip(self.row(i)) {
                *a += x;
            }
            count += 1;
        }
        if count == 0 {
            return None;
        }
        let c = count as f64;
        acc.iter_mut().for_each(|a| *a /= c);
        Some(acc)
    }
}

/// Points plus, for synthetic data, the index of the generating component.
///
/// Fitting code only ever sees [`Dataset::points`]; labels are read by
/// diagnostics alone.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Points,
    labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(points: Points, labels: Option<Vec<usize>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != points.len() {
                return Err(Error::InvalidData(format!(
                    "{} labels for {} points",
                    l.len(),
                    points.len()
                )));
            }
        }
        Ok(Self { points, labels })
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    /// Labels, checked to lie in `[0, k)`.
    pub fn labels_for(&self, k: usize) -> Result<&[usize]> {
        let labels = self.labels().ok_or(Error::Unlabeled)?;
        if let Some(bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidData(format!("label {bad} outside [0, {k})")));
        }
        Ok(labels)
    }

    /// Point indices of each `S_i`.
    pub fn members(&self, k: usize) -> Result<Vec<Vec<usize>>> {
        let labels = self.labels_for(k)?;
        let mut sets = alloc::vec![Vec::new(); k];
        for (idx, &l) in labels.iter().enumerate() {
            sets[l].push(idx);
        }
        Ok(sets)
    }
}

/// Draw `m` i.i.d. points: component by weight, then `μ_i + σ_i z`.
pub fn sample(model: &MixtureModel, m: usize, seed: u64) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::InvalidConfig("sample size must be at least 1".into()));
    }
    let n = model.dim();
    let weights = model.weights();
    let sigmas: Vec<f64> = (0..model.k()).map(|i| model.sigma(i)).collect();
    let mut rng = Rng::new(seed);
    let mut data = Vec::with_capacity(m * n);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let i = rng.categorical(&weights);
        let mean = model.mean(i);
        for &mu in mean {
            data.push(mu + sigmas[i] * rng.standard_normal());
        }
        labels.push(i);
    }
    Dataset::new(Points::new(n, data)?, Some(labels))
}

/// `log Σ_i w_i p_i(x)`, evaluated in log space.
pub fn log_density(model: &MixtureModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: x.len(),
        });
    }
    let terms: Vec<f64> = model
        .components()
        .iter()
        .map(|c| math::ln(c.weight) + math::spherical_log_density(x, &c.mean, c.variance))
        .collect();
    Ok(math::log_sum_exp(&terms))
}

/// Pairwise separations `c_ij` and their minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport {
    k: usize,
    pairwise: Vec<f64>,
    pub min_separation: f64,
}

impl SeparationReport {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pairwise[i * self.k + j]
    }

    /// Row-major `k × k` matrix.
    pub fn matrix(&self) -> &[f64] {
        &self.pairwise
    }
}

/// c-separation of a spherical mixture: `‖μ_i − μ_j‖ / (max(σ_i, σ_j)·√n)`.
pub fn separation(model: &MixtureModel) -> Result<SeparationReport> {
    let n = model.dim() as f64;
    let radii: Vec<f64> = (0..model.k()).map(|i| model.sigma(i) * math::sqrt(n)).collect();
    let means: Vec<&[f64]> = (0..model.k()).map(|i| model.mean(i)).collect();
    separation_from_radii(&means, &radii)
}

/// Separation for general covariances, given `trace(Σ_i)` per component;
/// the radius of a component is `√trace(Σ_i)`.
pub fn separation_from_traces(means: &[&[f64]], traces: &[f64]) -> Result<SeparationReport> {
    if let Some(t) = traces.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::InvalidModel(format!("trace {t} is not positive")));
    }
    let radii: Vec<f64> = traces.iter().map(|&t| math::sqrt(t)).collect();
    separation_from_radii(means, &radii)
}

fn separation_from_radii(means: &[&[f64]], radii: &[f64]) -> Result<SeparationReport> {
    let k = means.len();
    if k < 2 {
        return Err(Error::NoPairs);
    }
    if radii.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: radii.len(),
        });
    }
    let mut pairwise = alloc::vec![0.0; k * k];
    let mut min_separation = f64::INFINITY;
    for i in 0..k {
        for j in i + 1..k {
            let c = math::dist(means[i], means[j]) / radii[i].max(radii[j]);
            pairwise[i * k + j] = c;
            pairwise[j * k + i] = c;
            min_separation = min_separation.min(c);
        }
    }
    Ok(SeparationReport {
        k,
        pairwise,
        min_separation,
    })
}
