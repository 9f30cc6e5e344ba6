//! Synthetic mixture construction with a requested separation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::mixture::{separation, Component, MixtureModel};
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Means along nearly orthogonal random directions, scaled so the
    /// minimum pairwise separation equals `c`.
    RandomDirections,
    /// Means at `0, cσ√n·s, 2cσ√n·s, …` on the first axis.
    Collinear,
}

/// Parameters of a generated mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureRecipe {
    pub k: usize,
    pub n: usize,
    pub c: f64,
    /// One standard deviation shared by all components, or one per component.
    pub sigmas: Vec<f64>,
    /// Mixing weights; equal when `None`.
    pub weights: Option<Vec<f64>>,
    pub layout: Layout,
    /// Spacing multiplier `s` for the collinear layout.
    pub spacing: f64,
}

impl MixtureRecipe {
    pub fn new(k: usize, n: usize, c: f64, sigma: f64, layout: Layout) -> Self {
        Self {
            k,
            n,
            c,
            sigmas: vec![sigma],
            weights: None,
            layout,
            spacing: 1.0,
        }
    }

    fn sigma(&self, i: usize) -> f64 {
        if self.sigmas.len() == 1 {
            self.sigmas[0]
        } else {
            self.sigmas[i]
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        if self.k == 0 || self.n == 0 {
            return bad(format!("k = {} and n = {} must be positive", self.k, self.n));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return bad(format!("separation c = {} must be positive", self.c));
        }
        if self.sigmas.len() != 1 && self.sigmas.len() != self.k {
            return bad(format!("{} sigmas given for k = {}", self.sigmas.len(), self.k));
        }
        if self.sigmas.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return bad("sigmas must be positive".into());
        }
        if let Some(w) = &self.weights {
            if w.len() != self.k {
                return bad(format!("{} weights given for k = {}", w.len(), self.k));
            }
        }
        if !(self.spacing > 0.0) {
            return bad(format!("spacing {} must be positive", self.spacing));
        }
        Ok(())
    }

    /// Builds the model; `seed` is only consumed by the random layout.
    pub fn build(&self, seed: u64) -> Result<MixtureModel> {
        self.validate()?;
        let (k, n) = (self.k, self.n);
        let weights = self.weights.clone().unwrap_or_else(|| vec![1.0 / k as f64; k]);
        let sqrt_n = math::sqrt(n as f64);
        let means = match self.layout {
            Layout::Collinear => {
                let sigma_max = (0..k).map(|i| self.sigma(i)).fold(0.0, f64::max);
                let step = self.c * sigma_max * sqrt_n * self.spacing;
                (0..k)
                    .map(|j| {
                        let mut mu = vec![0.0; n];
                        mu[0] = j as f64 * step;
                        mu
                    })
                    .collect()
            }
            Layout::RandomDirections => random_directions(k, n, seed),
        };
        let components: Vec<Component> = means
            .into_iter()
            .zip(&weights)
            .enumerate()
            .map(|(i, (mean, &weight))| Component {
                weight,
                mean,
                variance: self.sigma(i) * self.sigma(i),
            })
            .collect();
        let model = MixtureModel::new(n, components)?;
        if k < 2 || self.layout == Layout::Collinear {
            return Ok(model);
        }
        scale_to_separation(model, self.c)
    }
}

fn random_directions(k: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    // Accept the first draw whose unit vectors are pairwise at least 1
    // apart (60 degrees); orthogonal vectors are √2 apart.
    let mut rng = Rng::new(seed);
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for _ in 0..100 {
        let dirs: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let mut g: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
                let norm = math::norm(&g);
                g.iter_mut().for_each(|v| *v /= norm);
                g
            })
            .collect();
        let mut closest = f64::INFINITY;
        for i in 0..k {
            for j in i + 1..k {
                closest = closest.min(math::dist(&dirs[i], &dirs[j]));
            }
        }
        if closest >= 1.0 {
            return dirs;
        }
        if best.as_ref().is_none_or(|(b, _)| closest > *b) {
            best = Some((closest, dirs));
        }
    }
    best.map(|(_, d)| d).unwrap_or_default()
}

fn scale_to_separation(model: MixtureModel, c: f64) -> Result<MixtureModel> {
    let current = separation(&model)?.min_separation;
    if !(current > 0.0) {
        return Err(Error::DegenerateData("generated means coincide".into()));
    }
    let mut factor = c / current;
    loop {
        let components = model
            .components()
            .iter()
            .map(|comp| Component {
                weight: comp.weight,
                mean: comp.mean.iter().map(|v| v * factor).collect(),
                variance: comp.variance,
            })
            .collect();
        let scaled = MixtureModel::new(model.dim(), components)?;
        if separation(&scaled)?.min_separation >= c {
            return Ok(scaled);
        }
        factor *= 1.0 + f64::EPSILON;
    }
}
