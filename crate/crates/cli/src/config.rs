//! `--config` files: a JSON [`ExperimentSpec`] whose fields act as defaults
//! for the matching command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twoem_core::{Layout, MixtureModel, MixtureRecipe};

use crate::error::CliError;
use crate::files::{ModeName, ModelFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutName {
    RandomDirections,
    Collinear,
}

impl From<LayoutName> for Layout {
    fn from(l: LayoutName) -> Self {
        match l {
            LayoutName::RandomDirections => Layout::RandomDirections,
            LayoutName::Collinear => Layout::Collinear,
        }
    }
}

/// Generator parameters; see [`MixtureRecipe`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeSpec {
    pub k: usize,
    pub n: usize,
    pub c: f64,
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default = "default_layout")]
    pub layout: LayoutName,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

fn default_sigmas() -> Vec<f64> {
    vec![1.0]
}

fn default_layout() -> LayoutName {
    LayoutName::RandomDirections
}

fn default_spacing() -> f64 {
    1.0
}

impl RecipeSpec {
    pub fn to_recipe(&self) -> MixtureRecipe {
        MixtureRecipe {
            k: self.k,
            n: self.n,
            c: self.c,
            sigmas: self.sigmas.clone(),
            weights: self.weights.clone(),
            layout: self.layout.into(),
            spacing: self.spacing,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub data: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub result: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// Bench grid, for configs driving `bench`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub ns: Vec<usize>,
    #[serde(default)]
    pub cs: Vec<f64>,
    pub iters: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: String,
    /// An explicit model; takes precedence over `recipe`.
    pub model: Option<ModelFile>,
    pub recipe: Option<RecipeSpec>,
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub l: Option<usize>,
    pub variance_mode: Option<ModeName>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub outputs: OutputPaths,
    pub grid: Option<GridSpec>,
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// The explicit model if present, else the recipe built with `seed`.
    pub fn build_model(&self, seed: u64) -> Result<Option<MixtureModel>, CliError> {
        if let Some(m) = &self.model {
            return m.to_model().map(Some);
        }
        match &self.recipe {
            Some(r) => Ok(Some(r.to_recipe().build(seed)?)),
            None => Ok(None),
        }
    }
}

/// Loads `path` if given, else an empty spec.
pub fn load_optional(path: Option<&Path>) -> Result<ExperimentSpec, CliError> {
    path.map_or_else(|| Ok(ExperimentSpec::default()), ExperimentSpec::load)
}
