//! On-disk formats: JSON model files, CSV data sets, JSON fit results.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use twoem_core::em::{EmState, VarianceMode, Variances};
use twoem_core::two_round::{InitialEstimates, Pruned, TwoRoundResult};
use twoem_core::{Component, Dataset, MixtureModel, Points};

use crate::error::CliError;

/// `{ "n": .., "components": [{ "weight", "mean", "variance" }] }`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub components: Vec<ComponentFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentFile {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub variance: f64,
}

impl From<&MixtureModel> for ModelFile {
    fn from(model: &MixtureModel) -> Self {
        Self {
            n: model.dim(),
            components: model
                .components()
                .iter()
                .map(|c| ComponentFile {
                    weight: c.weight,
                    mean: c.mean.clone(),
                    variance: c.variance,
                })
                .collect(),
        }
    }
}

impl From<&EmState> for ModelFile {
    fn from(state: &EmState) -> Self {
        Self {
            n: state.dim(),
            components: (0..state.len())
                .map(|i| ComponentFile {
                    weight: state.weights()[i],
                    mean: state.centers()[i].clone(),
                    variance: state.variance(i),
                })
                .collect(),
        }
    }
}

impl ModelFile {
    pub fn to_model(&self) -> Result<MixtureModel, CliError> {
        let components = self
            .components
            .iter()
            .map(|c| Component {
                weight: c.weight,
                mean: c.mean.clone(),
                variance: c.variance,
            })
            .collect();
        Ok(MixtureModel::new(self.n, components)?)
    }

    pub fn to_state(&self, mode: VarianceMode) -> Result<EmState, CliError> {
        let centers = self.components.iter().map(|c| c.mean.clone()).collect();
        let weights = self.components.iter().map(|c| c.weight).collect();
        let variances = match mode {
            VarianceMode::Common => {
                let v = self.components.first().map_or(f64::NAN, |c| c.variance);
                if self.components.iter().any(|c| c.variance != v) {
                    return Err(CliError::Data("common-variance state with differing variances".into()));
                }
                Variances::Common(v)
            }
            VarianceMode::PerCenter => Variances::PerCenter(self.components.iter().map(|c| c.variance).collect()),
        };
        let state = EmState::new(centers, weights, variances)?;
        if state.dim() != self.n {
            return Err(CliError::Data(format!(
                "state dimension {} but n = {}",
                state.dim(),
                self.n
            )));
        }
        Ok(state)
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_text(path, &to_json(value))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_model(path: &Path, model: &MixtureModel) -> Result<(), CliError> {
    write_json(path, &ModelFile::from(model))
}

pub fn read_model(path: &Path) -> Result<MixtureModel, CliError> {
    read_json::<ModelFile>(path)?.to_model()
}

/// 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with header `x0,..,x{n-1}` plus a final `label` column when labels
/// are present.
pub fn dataset_csv(dataset: &Dataset) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let n = dataset.dim();
    let mut header: Vec<String> = (0..n).map(|j| format!("x{j}")).collect();
    if dataset.labels().is_some() {
        header.push("label".into());
    }
    w.write_record(&header).map_err(csv_error)?;
    for (i, row) in dataset.points().rows().enumerate() {
        let mut record: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
        if let Some(labels) = dataset.labels() {
            record.push(labels[i].to_string());
        }
        w.write_record(&record).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ascii output"))
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Data(format!("csv: {e}"))
}

pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<(), CliError> {
    write_text(path, &dataset_csv(dataset)?)
}

pub fn parse_dataset(text: &str) -> Result<Dataset, CliError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_error)?.clone();
    let labeled = header.iter().next_back() == Some("label");
    let n = header.len() - usize::from(labeled);
    if n == 0 {
        return Err(CliError::Data("data set has no coordinate columns".into()));
    }
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_error)?;
        if record.len() != header.len() {
            return Err(CliError::Data(format!(
                "row {}: {} fields, expected {}",
                line + 1,
                record.len(),
                header.len()
            )));
        }
        for field in record.iter().take(n) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| CliError::Data(format!("row {}: bad number {field:?}", line + 1)))?;
            values.push(v);
        }
        if labeled {
            let field = &record[n];
            let l: usize = field
                .trim()
                .parse()
                .map_err(|_| CliError::Data(format!("row {}: bad label {field:?}", line + 1)))?;
            labels.push(l);
        }
    }
    let points = Points::new(n, values)?;
    Ok(Dataset::new(points, labeled.then_some(labels))?)
}

pub fn read_dataset(path: &Path) -> Result<Dataset, CliError> {
    parse_dataset(&read_text(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    Common,
    PerCenter,
}

impl From<ModeName> for VarianceMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Common => VarianceMode::Common,
            ModeName::PerCenter => VarianceMode::PerCenter,
        }
    }
}

impl From<VarianceMode> for ModeName {
    fn from(m: VarianceMode) -> Self {
        match m {
            VarianceMode::Common => ModeName::Common,
            VarianceMode::PerCenter => ModeName::PerCenter,
        }
    }
}

/// One serialized state, tagged with the pipeline stage it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFile {
    pub stage: String,
    #[serde(flatten)]
    pub model: ModelFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub algorithm: String,
    pub k: usize,
    pub l: usize,
    pub variance_mode: ModeName,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_used: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seed_indices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub survivors: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub selected: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub log_likelihood_trace: Vec<f64>,
    pub stages: Vec<StageFile>,
}

fn stage(name: &str, state: &EmState) -> StageFile {
    StageFile {
        stage: name.into(),
        model: ModelFile::from(state),
    }
}

impl ResultFile {
    pub fn from_two_round(result: &TwoRoundResult, k: usize, l: usize, mode: VarianceMode, seed: u64) -> Self {
        Self {
            algorithm: "two-round".into(),
            k,
            l,
            variance_mode: mode.into(),
            seed,
            threshold_used: Some(result.threshold_used),
            seed_indices: result.initial.seed_indices.clone(),
            survivors: result.pruned.survivors.clone(),
            selected: result.pruned.selected.clone(),
            log_likelihood_trace: Vec::new(),
            stages: vec![
                stage("initial", &result.initial.state),
                stage("after_round1", &result.after_round1),
                stage("pruned", &result.pruned.state),
                stage("final", &result.final_state),
            ],
        }
    }

    pub fn from_vanilla(initial: &InitialEstimates, final_state: &EmState, trace: &[f64], k: usize, seed: u64) -> Self {
        Self {
            algorithm: "vanilla".into(),
            k,
            l: initial.seed_indices.len(),
            variance_mode: final_state.mode().into(),
            seed,
            threshold_used: None,
            seed_indices: initial.seed_indices.clone(),
            survivors: Vec::new(),
            selected: Vec::new(),
            log_likelihood_trace: trace.to_vec(),
            stages: vec![stage("initial", &initial.state), stage("final", final_state)],
        }
    }

    pub fn stage(&self, name: &str) -> Option<&ModelFile> {
        self.stages.iter().find(|s| s.stage == name).map(|s| &s.model)
    }

    pub fn final_state(&self) -> Result<EmState, CliError> {
        self.stage("final")
            .ok_or_else(|| CliError::Data("result file has no final stage".into()))?
            .to_state(self.variance_mode.into())
    }

    /// Rebuilds the full two-round result when every stage is present.
    pub fn two_round(&self) -> Result<Option<TwoRoundResult>, CliError> {
        if self.algorithm != "two-round" {
            return Ok(None);
        }
        let mode: VarianceMode = self.variance_mode.into();
        let get = |name: &str| {
            self.stage(name)
                .ok_or_else(|| CliError::Data(format!("result file has no {name} stage")))
                .and_then(|m| m.to_state(mode))
        };
        let threshold_used = self
            .threshold_used
            .ok_or_else(|| CliError::Data("two-round result without threshold_used".into()))?;
        Ok(Some(TwoRoundResult {
            initial: InitialEstimates {
                state: get("initial")?,
                seed_indices: self.seed_indices.clone(),
            },
            after_round1: get("after_round1")?,
            pruned: Pruned {
                state: get("pruned")?,
                selected: self.selected.clone(),
                survivors: self.survivors.clone(),
            },
            final_state: get("final")?,
            threshold_used,
        }))
    }
}
