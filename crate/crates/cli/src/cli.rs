//! Argument parsing and command dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use twoem_core::diagnostics::{evaluate_fit, evaluate_two_round, FitReport};
use twoem_core::em::{run_vanilla_em, VarianceMode};
use twoem_core::mixture::sample;
use twoem_core::rng::child_seed;
use twoem_core::two_round::{choose_l, init, two_round_em, TwoRoundConfig};
use twoem_core::{math, MixtureModel};

use crate::config::{load_optional, LayoutName, RecipeSpec};
use crate::error::{CliError, EXIT_OK};
use crate::experiments::{bench, bench_csv, demo_figure1, BenchParams, Figure1Params};
use crate::files::{self, ModeName, ResultFile};

#[derive(Debug, Parser)]
#[command(name = "twoem", version, about = "Two-round EM for spherical Gaussian mixtures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a labeled data set from a generated or given mixture.
    Generate(GenerateArgs),
    /// Fit a mixture to a data set.
    Fit(FitArgs),
    /// Score a fit against the true model.
    Eval(EvalArgs),
    /// Vanilla EM with a missed cluster versus two-round EM.
    #[command(name = "demo-figure1")]
    DemoFigure1(DemoArgs),
    /// Two-round versus vanilla EM over a grid of (n, c).
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// JSON experiment spec supplying defaults for the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Minimum pairwise separation.
    #[arg(long)]
    pub c: Option<f64>,
    /// One standard deviation, or one per component (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub layout: Option<LayoutName>,
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Number of points.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_data: Option<PathBuf>,
    #[arg(long)]
    pub out_model: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    TwoRound,
    Vanilla,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Data set CSV (defaults to the spec's data output).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Initial center count; defaults to the choice for weights ≥ 1/(2k).
    #[arg(long)]
    pub l: Option<usize>,
    /// Weight lower bound used to choose `l` when it is not given.
    #[arg(long)]
    pub w_min: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeName>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "two-round")]
    pub algorithm: Algorithm,
    /// Vanilla EM iterations.
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub result: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Write the machine-readable report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit with status 4 unless every excess error is within tolerance and
    /// every weight lies in its window.
    #[arg(long)]
    pub check: bool,
    /// Excess-error tolerance for `--check`; defaults to 0.01·σ_max·√n.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 2000)]
    pub m: usize,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dimensions; pass the flag with no value for an empty grid.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub ns: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub cs: Option<Vec<f64>>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Vanilla EM iterations `T`.
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Leave out the wall-time columns so output is reproducible.
    #[arg(long)]
    pub omit_timing: bool,
}

fn require<T>(value: Option<T>, name: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("--{name} is required")))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Data(format!("stdout: {e}")))
}

fn generate(args: GenerateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = load_optional(args.config.as_deref())?;
    let seed = args.seed.or(spec.seed).unwrap_or(0);
    let m = require(args.m.or(spec.m), "m")?;
    if m == 0 {
        return Err(CliError::Usage("m must be positive".into()));
    }
    let flag_recipe = args.k.is_some() || args.n.is_some() || args.c.is_some();
    let model = match &spec.model {
        Some(m) if !flag_recipe => m.to_model()?,
        _ => {
            let base = spec.recipe.as_ref();
            let mut recipe = RecipeSpec {
                k: require(args.k.or(base.map(|r| r.k)), "k")?,
                n: require(args.n.or(base.map(|r| r.n)), "n")?,
                c: require(args.c.or(base.map(|r| r.c)), "c")?,
                sigmas: base.map_or_else(|| vec![1.0], |r| r.sigmas.clone()),
                weights: base.and_then(|r| r.weights.clone()),
                layout: base.map_or(LayoutName::RandomDirections, |r| r.layout),
                spacing: base.map_or(1.0, |r| r.spacing),
            };
            override_recipe(&mut recipe, &args);
            recipe.to_recipe().build(child_seed(seed, "model", 0))?
        }
    };
    let data = sample(&model, m, child_seed(seed, "sample", 0))?;
    let data_path = args.out_data.or(spec.outputs.data).unwrap_or_else(|| "data.csv".into());
    let model_path = args
        .out_model
        .or(spec.outputs.model)
        .unwrap_or_else(|| "model.json".into());
    files::write_dataset(&data_path, &data)?;
    files::write_model(&model_path, &model)?;
    emit(
        out,
        &format!(
            "wrote {} points (n = {}, k = {}) to {} and the model to {}\n",
            m,
            model.dim(),
            model.k(),
            data_path.display(),
            model_path.display()
        ),
    )
}

fn override_recipe(r: &mut RecipeSpec, args: &GenerateArgs) {
    if let Some(s) = &args.sigma {
        r.sigmas = s.clone();
    }
    if let Some(w) = &args.weights {
        r.weights = Some(w.clone());
    }
    if let Some(l) = args.layout {
        r.layout = l;
    }
    if let Some(s) = args.spacing {
        r.spacing = s;
    }
}

fn fit(args: FitArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = load_optional(args.config.as_deref())?;
    let data_path = require(args.data.or(spec.outputs.data.clone()), "data")?;
    let spec_k = spec
        .k
        .or(spec.recipe.as_ref().map(|r| r.k))
        .or(spec.model.as_ref().map(|m| m.components.len()));
    let k = require(args.k.or(spec_k), "k")?;
    if k == 0 {
        return Err(CliError::Usage("k must be positive".into()));
    }
    let mode: VarianceMode = args.mode.or(spec.variance_mode).unwrap_or(ModeName::Common).into();
    let seed = args.seed.or(spec.seed).unwrap_or(0);
    let out_path = args.out.or(spec.outputs.result).unwrap_or_else(|| "result.json".into());

    let result = match args.algorithm {
        Algorithm::TwoRound => {
            let l = match args.l.or(spec.l) {
                Some(l) => l,
                None => choose_l(k, args.w_min.unwrap_or(1.0 / (2.0 * k as f64)))?,
            };
            if l < k {
                return Err(CliError::Usage(format!("l must be ≥ k (got l = {l}, k = {k})")));
            }
            let data = files::read_dataset(&data_path)?;
            let cfg = TwoRoundConfig {
                k,
                l,
                variance_mode: mode,
                w_min_hint: args.w_min,
                seed,
            };
            let r = two_round_em(data.points(), &cfg)?;
            ResultFile::from_two_round(&r, k, l, mode, seed)
        }
        Algorithm::Vanilla => {
            if k < 2 {
                return Err(CliError::Usage("vanilla EM seeds k ≥ 2 centers".into()));
            }
            let data = files::read_dataset(&data_path)?;
            let initial = init(data.points(), &TwoRoundConfig::new(k, k, mode, seed))?;
            let (state, trace) = run_vanilla_em(data.points(), &initial.state, args.iters)?;
            ResultFile::from_vanilla(&initial, &state, &trace, k, seed)
        }
    };
    files::write_json(&out_path, &result)?;
    emit(
        out,
        &format!(
            "wrote {} result ({} centers) to {}\n",
            result.algorithm,
            k,
            out_path.display()
        ),
    )
}

#[derive(Debug, Serialize)]
struct WindowJson {
    weight: f64,
    cluster_fraction: f64,
    lower: f64,
    upper: f64,
    ok: bool,
}

#[derive(Debug, Serialize)]
struct Round1Json {
    checked: usize,
    within: usize,
    worst_ratio: f64,
}

/// Machine-readable form of a [`FitReport`]. Non-finite values become null.
#[derive(Debug, Serialize)]
struct EvalJson {
    algorithm: String,
    k: usize,
    n: usize,
    separation: Option<f64>,
    assignment: Vec<usize>,
    exact_matching: bool,
    per_center_error: Vec<f64>,
    empirical_mean_error: Vec<Option<f64>>,
    excess_error: Vec<Option<f64>>,
    max_error: f64,
    max_excess: Option<f64>,
    tolerance: f64,
    excess_within_tolerance: bool,
    weight_windows: Vec<WindowJson>,
    weights_ok: bool,
    weights_informative: bool,
    round1: Option<Round1Json>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn eval_json(report: &FitReport, algorithm: &str, model: &MixtureModel, tolerance: f64) -> EvalJson {
    EvalJson {
        algorithm: algorithm.into(),
        k: model.k(),
        n: model.dim(),
        separation: finite(report.separation),
        assignment: report.matching.assignment.clone(),
        exact_matching: report.matching.exact,
        per_center_error: report.per_center_error.clone(),
        empirical_mean_error: report.empirical_mean_error.iter().map(|&v| finite(v)).collect(),
        excess_error: report.excess_error.iter().map(|&v| finite(v)).collect(),
        max_error: report.max_error(),
        max_excess: finite(report.max_excess()),
        tolerance,
        excess_within_tolerance: report.excess_within(tolerance),
        weight_windows: report
            .weight_windows
            .iter()
            .map(|w| WindowJson {
                weight: w.weight,
                cluster_fraction: w.cluster_fraction,
                lower: w.lower,
                upper: w.upper,
                ok: w.contains_weight(),
            })
            .collect(),
        weights_ok: report.all_weights_ok(),
        weights_informative: report.weights_informative(),
        round1: report.round1.map(|r| Round1Json {
            checked: r.checked,
            within: r.within,
            worst_ratio: r.worst_ratio,
        }),
    }
}

fn eval_text(j: &EvalJson) -> String {
    let mut s = format!("eval {} k={} n={}", j.algorithm, j.k, j.n);
    if let Some(c) = j.separation {
        s += &format!(" c={c:.4}");
    }
    s += "\ncomponent,error,empirical_mean_error,excess,weight,window_lower,window_upper,weight_ok\n";
    let opt = |v: Option<f64>| v.map_or_else(|| "nan".into(), |v| format!("{v:.6e}"));
    for i in 0..j.k {
        let w = &j.weight_windows[i];
        s += &format!(
            "{i},{:.6e},{},{},{:.6e},{:.6e},{:.6e},{}\n",
            j.per_center_error[i],
            opt(j.empirical_mean_error[i]),
            opt(j.excess_error[i]),
            w.weight,
            w.lower,
            w.upper,
            w.ok
        );
    }
    s += &format!("max error: {:.6e}\n", j.max_error);
    s += &format!(
        "max excess: {} (tolerance {:.6e}, {})\n",
        opt(j.max_excess),
        j.tolerance,
        if j.excess_within_tolerance { "ok" } else { "exceeded" }
    );
    s += &format!(
        "weights in window: {}{}\n",
        j.weights_ok,
        if j.weights_informative { "" } else { " (uninformative)" }
    );
    if let Some(r) = &j.round1 {
        s += &format!(
            "round-1 centers near their origin: {}/{} (worst ratio {:.4})\n",
            r.within, r.checked, r.worst_ratio
        );
    }
    s
}

fn eval(args: EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let result: ResultFile = files::read_json(&args.result)?;
    let data = files::read_dataset(&args.data)?;
    let model = files::read_model(&args.model)?;
    let report = match result.two_round()? {
        Some(r) => evaluate_two_round(&r, &data, &model)?,
        None => evaluate_fit(&result.final_state()?, &data, &model)?,
    };
    let sigma_max = (0..model.k()).map(|i| model.sigma(i)).fold(0.0, f64::max);
    let tolerance = args
        .tolerance
        .unwrap_or(0.01 * sigma_max * math::sqrt(model.dim() as f64));
    let json = eval_json(&report, &result.algorithm, &model, tolerance);
    emit(out, &eval_text(&json))?;
    emit(out, &files::to_json(&json))?;
    if let Some(path) = &args.out {
        files::write_json(path, &json)?;
    }
    if args.check && !(json.excess_within_tolerance && json.weights_ok) {
        return Err(CliError::Check("fit outside tolerance or weight window".into()));
    }
    Ok(())
}

fn demo(args: DemoArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = Figure1Params {
        n: args.n,
        k: args.k,
        m: args.m,
        trials: args.trials,
        iters: args.iters,
        seed: args.seed,
    };
    let report = demo_figure1(&params)?;
    let text = report.to_text();
    emit(out, &text)?;
    if let Some(path) = &args.out {
        write_file(path, &text)?;
    }
    match report.passed() {
        Some(false) => Err(CliError::Check(
            "missed-cluster demonstration did not reach its pass counts".into(),
        )),
        _ => Ok(()),
    }
}

fn bench_cmd(args: BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = load_optional(args.config.as_deref())?;
    let grid = spec.grid.clone().unwrap_or_default();
    let defaults = BenchParams::default();
    let from_grid = spec.grid.is_some();
    let params = BenchParams {
        ns: args.ns.unwrap_or(if from_grid { grid.ns } else { defaults.ns }),
        cs: args.cs.unwrap_or(if from_grid { grid.cs } else { defaults.cs }),
        k: args.k.or(spec.k).unwrap_or(defaults.k),
        m: args.m.or(spec.m).unwrap_or(defaults.m),
        trials: args.trials.or(spec.trials).unwrap_or(defaults.trials),
        iters: args.iters.or(grid.iters).unwrap_or(defaults.iters),
        seed: args.seed.or(spec.seed).unwrap_or(defaults.seed),
    };
    let rows = bench(&params)?;
    let text = bench_csv(&rows, !args.omit_timing);
    match args.out.or(spec.outputs.report) {
        Some(path) => write_file(&path, &text),
        None => emit(out, &text),
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => generate(a, out),
        Command::Fit(a) => fit(a, out),
        Command::Eval(a) => eval(a, out),
        Command::DemoFigure1(a) => demo(a, out),
        Command::Bench(a) => bench_cmd(a, out),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
