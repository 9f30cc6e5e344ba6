//! E-step, M-steps and the vanilla EM loop for spherical mixtures.
//!
//! Reductions are single-threaded and run point-major, then center, so a
//! given input always produces bit-identical output.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::mixture::Points;
use crate::{Error, Result};

/// Total responsibility below which a center is treated as starved by the
/// M-step: it keeps its previous mean (and, per-center, its previous
/// variance) and is left out of the common-variance numerator.
pub const DEGENERATE_MASS: f64 = 1e-12;

/// Lower clamp applied to every variance estimate.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarianceMode {
    Common,
    PerCenter,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Variances {
    Common(f64),
    PerCenter(Vec<f64>),
}

impl Variances {
    pub fn mode(&self) -> VarianceMode {
        match self {
            Variances::Common(_) => VarianceMode::Common,
            Variances::PerCenter(_) => VarianceMode::PerCenter,
        }
    }

    pub fn get(&self, i: usize) -> f64 {
        match self {
            Variances::Common(v) => *v,
            Variances::PerCenter(vs) => vs[i],
        }
    }
}

/// Current parameter estimates: centers, mixing weights, variance(s).
#[derive(Debug, Clone, PartialEq)]
pub struct EmState {
    dim: usize,
    centers: Vec<Vec<f64>>,
    weights: Vec<f64>,
    variances: Variances,
}

impl EmState {
    pub fn new(centers: Vec<Vec<f64>>, weights: Vec<f64>, variances: Variances) -> Result<Self> {
        let l = centers.len();
        if l == 0 {
            return Err(Error::InvalidState("no centers".into()));
        }
        let dim = centers[0].len();
        if dim == 0 {
            return Err(Error::InvalidState("zero-dimensional centers".into()));
        }
        if let Some(c) = centers.iter().find(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.len(),
            });
        }
        if weights.len() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidState("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("weights sum to {total}, not 1")));
        }
        let bad_variance = |v: f64| !(v > 0.0) || !v.is_finite();
        match &variances {
            Variances::Common(v) if bad_variance(*v) => {
                return Err(Error::InvalidState(format!("variance {v} is not positive")));
            }
            Variances::PerCenter(vs) => {
                if vs.len() != l {
                    return Err(Error::DimensionMismatch {
                        expected: l,
                        found: vs.len(),
                    });
                }
                if let Some(v) = vs.iter().find(|v| bad_variance(**v)) {
                    return Err(Error::InvalidState(format!("variance {v} is not positive")));
                }
            }
            _ => {}
        }
        Ok(Self {
            dim,
            centers,
            weights,
            variances,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of centers `l'`.
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn variances(&self) -> &Variances {
        &self.variances
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.variances.get(i)
    }

    pub fn mode(&self) -> VarianceMode {
        self.variances.mode()
    }

    fn check_points(&self, points: &Points) -> Result<()> {
        if points.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: points.dim(),
            });
        }
        Ok(())
    }
}

/// `m × l'` matrix of fractional assignments; each row sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    cols: usize,
    values: Vec<f64>,
}

impl Responsibilities {
    /// Builds from explicit rows, checking entries lie in `[0, 1]` and rows
    /// sum to 1 within 1e-10.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if cols == 0 {
            return Err(Error::InvalidState("empty responsibility matrix".into()));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidState(format!("row {r} has an entry outside [0, 1]")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidState(format!("row {r} sums to {s}")));
            }
        }
        Ok(Self {
            cols,
            values: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.cols
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.values[x * self.cols..(x + 1) * self.cols]
    }

    pub fn get(&self, x: usize, i: usize) -> f64 {
        self.values[x * self.cols + i]
    }

    /// Column sums `Σ_x p_i(x)`.
    pub fn masses(&self) -> Vec<f64> {
        let mut mass = vec![0.0; self.cols];
        for row in self.values.chunks_exact(self.cols) {
            for (acc, p) in mass.iter_mut().zip(row) {
                *acc += p;
            }
        }
        mass
    }
}

/// Responsibilities from unnormalized `weights` (any positive scale) plus
/// the data log-likelihood under the normalized weights.
pub(crate) fn e_step_raw(
    points: &Points,
    centers: &[Vec<f64>],
    weights: &[f64],
    variances: &Variances,
) -> Result<(Responsibilities, f64)> {
    let l = centers.len();
    let weight_total: f64 = weights.iter().sum();
    let log_weights: Vec<f64> = weights.iter().map(|w| math::ln(w / weight_total)).collect();
    let n = points.dim() as f64;
    let log_norms: Vec<f64> = (0..l)
        .map(|i| -0.5 * n * math::ln(2.0 * math::PI * variances.get(i)))
        .collect();

    let mut values = Vec::with_capacity(points.len() * l);
    let mut terms = vec![0.0; l];
    let mut log_likelihood = 0.0;
    for (x, point) in points.rows().enumerate() {
        for (i, t) in terms.iter_mut().enumerate() {
            let v = variances.get(i);
            *t = log_weights[i] + log_norms[i] - math::sq_dist(point, &centers[i]) / (2.0 * v);
        }
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Internal(format!(
                "point {x}: every log-responsibility term is {max}"
            )));
        }
        let start = values.len();
        let mut sum = 0.0;
        for t in &terms {
            let e = math::exp(t - max);
            sum += e;
            values.push(e);
        }
        for p in &mut values[start..] {
            *p /= sum;
        }
        log_likelihood += max + math::ln(sum);
    }
    Ok((Responsibilities { cols: l, values }, log_likelihood))
}

/// Fractional assignments `p_i(x) ∝ w_i τ_i(x)`, computed with a per-row
/// max shift in log space.
pub fn e_step(points: &Points, state: &EmState) -> Result<Responsibilities> {
    e_step_with_log_likelihood(points, state).map(|(r, _)| r)
}

/// E-step plus `Σ_x log Σ_i w_i τ_i(x)` for the same state.
pub fn e_step_with_log_likelihood(points: &Points, state: &EmState) -> Result<(Responsibilities, f64)> {
    state.check_points(points)?;
    e_step_raw(points, &state.centers, &state.weights, &state.variances)
}

/// Mixture log-likelihood `Σ_x log Σ_i w_i τ_i(x)`.
pub fn log_likelihood(points: &Points, state: &EmState) -> Result<f64> {
    e_step_with_log_likelihood(points, state).map(|(_, ll)| ll)
}

/// M-step in either variance mode. `previous` supplies the fallback mean
/// (and per-center variance) for starved centers.
pub fn m_step(points: &Points, resp: &Responsibilities, mode: VarianceMode, previous: &EmState) -> Result<EmState> {
    let m = points.len();
    let l = resp.cols();
    if resp.rows() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: resp.rows(),
        });
    }
    if previous.len() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            found: previous.len(),
        });
    }
    previous.check_points(points)?;
    let dim = points.dim();
    let mf = m as f64;
    let nf = dim as f64;

    let mut mass = vec![0.0; l];
    let mut sums = vec![vec![0.0; dim]; l];
    for (x, point) in points.rows().enumerate() {
        let row = resp.row(x);
        for i in 0..l {
            let p = row[i];
            mass[i] += p;
            for (acc, v) in sums[i].iter_mut().zip(point) {
                *acc += p * v;
            }
        }
    }

    let degenerate: Vec<bool> = mass.iter().map(|&s| s < DEGENERATE_MASS).collect();
    let weights: Vec<f64> = mass.iter().map(|s| s / mf).collect();
    let centers: Vec<Vec<f64>> = sums
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            if degenerate[i] {
                previous.centers[i].clone()
            } else {
                s.into_iter().map(|v| v / mass[i]).collect()
            }
        })
        .collect();

    let mut spread = vec![0.0; l];
    for (x, point) in points.rows().enumerate() {
        let row = resp.row(x);
        for i in 0..l {
            if !degenerate[i] {
                spread[i] += math::sq_dist(point, &centers[i]) * row[i];
            }
        }
    }

    let variances = match mode {
        VarianceMode::Common => {
            let total: f64 = spread.iter().sum();
            Variances::Common((total / (mf * nf)).max(VARIANCE_FLOOR))
        }
        VarianceMode::PerCenter => Variances::PerCenter(
            (0..l)
                .map(|i| {
                    if degenerate[i] {
                        previous.variance(i)
                    } else {
                        (spread[i] / (nf * mass[i])).max(VARIANCE_FLOOR)
                    }
                })
                .collect(),
        ),
    };

    Ok(EmState {
        dim,
        centers,
        weights,
        variances,
    })
}

/// M-step with one shared variance `σ² = (1/mn) Σ_x Σ_i ‖x − μ_i‖² p_i(x)`,
/// using the updated centers.
pub fn m_step_common(points: &Points, resp: &Responsibilities, previous: &EmState) -> Result<EmState> {
    m_step(points, resp, VarianceMode::Common, previous)
}

/// M-step with `σ_i² = Σ_x ‖x − μ_i‖² p_i(x) / (n · m w_i)`.
pub fn m_step_per_center(points: &Points, resp: &Responsibilities, previous: &EmState) -> Result<EmState> {
    m_step(points, resp, VarianceMode::PerCenter, previous)
}

/// One E-step followed by one M-step in the state's own variance mode.
pub fn em_round(points: &Points, state: &EmState) -> Result<EmState> {
    let resp = e_step(points, state)?;
    m_step(points, &resp, state.mode(), state)
}

/// Plain EM for a fixed number of iterations. The trace holds the
/// log-likelihood of the state reached after each iteration.
pub fn run_vanilla_em(points: &Points, init: &EmState, iterations: usize) -> Result<(EmState, Vec<f64>)> {
    let mut trace = Vec::with_capacity(iterations);
    if iterations == 0 {
        return Ok((init.clone(), trace));
    }
    let mode = init.mode();
    let (mut resp, _) = e_step_with_log_likelihood(points, init)?;
    let mut state = init.clone();
    for _ in 0..iterations {
        state = m_step(points, &resp, mode, &state)?;
        let (next, ll) = e_step_with_log_likelihood(points, &state)?;
        trace.push(ll);
        resp = next;
    }
    Ok((state, trace))
}
