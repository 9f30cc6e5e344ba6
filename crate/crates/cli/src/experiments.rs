//! Built-in experiment suites: the missed-cluster demonstration and the
//! two-round versus vanilla benchmark.

use std::fmt::Write as _;
use std::time::Instant;

use twoem_core::diagnostics::{evaluate_fit, match_centers};
use twoem_core::em::{em_round, EmState, VarianceMode};
use twoem_core::mixture::sample;
use twoem_core::rng::{child_seed, Rng};
use twoem_core::two_round::{choose_l, init, init_from_indices, two_round_em, TwoRoundConfig};
use twoem_core::{math, Layout, MixtureModel, MixtureRecipe, Points};

use crate::error::CliError;
use crate::files::format_float;

/// Below this dimension the demo still runs but its pass/fail verdict is
/// only advisory: the concentration the argument relies on has not set in.
pub const ADVISORY_MIN_N: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Figure1Params {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub trials: usize,
    pub iters: usize,
    pub seed: u64,
}

impl Default for Figure1Params {
    fn default() -> Self {
        Self {
            n: 100,
            k: 5,
            m: 2000,
            trials: 10,
            iters: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure1Trial {
    /// Matched error of component 1 after vanilla EM.
    pub vanilla_component1_error: f64,
    pub vanilla_max_error: f64,
    /// Largest distance, over iterations `1..=iters`, between the center
    /// seeded in cluster 2 and the midpoint of `μ_1, μ_2`, as a fraction of
    /// `‖μ_1 − μ_2‖`.
    pub midpoint_drift: f64,
    /// `None` when the two-round run failed (for example, pruning starved).
    pub two_round_max_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure1Report {
    pub params: Figure1Params,
    pub l: usize,
    pub trials: Vec<Figure1Trial>,
}

impl Figure1Report {
    pub fn advisory(&self) -> bool {
        self.params.n < ADVISORY_MIN_N
    }

    fn sqrt_n(&self) -> f64 {
        (self.params.n as f64).sqrt()
    }

    pub fn vanilla_stuck(&self, t: &Figure1Trial) -> bool {
        t.vanilla_component1_error > self.sqrt_n()
    }

    pub fn two_round_ok(&self, t: &Figure1Trial) -> bool {
        t.two_round_max_error.is_some_and(|e| e < 0.25 * self.sqrt_n())
    }

    pub fn stuck_count(&self) -> usize {
        self.trials.iter().filter(|t| self.vanilla_stuck(t)).count()
    }

    pub fn success_count(&self) -> usize {
        self.trials.iter().filter(|t| self.two_round_ok(t)).count()
    }

    /// `⌈0.8·trials⌉` and `⌈0.9·trials⌉`.
    pub fn required(&self) -> (usize, usize) {
        let t = self.trials.len();
        ((8 * t).div_ceil(10), (9 * t).div_ceil(10))
    }

    /// `None` in the advisory regime.
    pub fn passed(&self) -> Option<bool> {
        let (need_stuck, need_ok) = self.required();
        (!self.advisory()).then(|| self.stuck_count() >= need_stuck && self.success_count() >= need_ok)
    }

    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "missed-cluster demo n={} k={} m={} trials={} iters={} seed={} l={}",
            p.n, p.k, p.m, p.trials, p.iters, p.seed, self.l
        );
        let _ = writeln!(
            s,
            "trial,vanilla_c1_error,vanilla_max_error,midpoint_drift,two_round_max_error,vanilla_stuck,two_round_ok"
        );
        for (i, t) in self.trials.iter().enumerate() {
            let tr = t.two_round_max_error.map_or_else(|| "failed".to_string(), format_float);
            let _ = writeln!(
                s,
                "{i},{},{},{},{tr},{},{}",
                format_float(t.vanilla_component1_error),
                format_float(t.vanilla_max_error),
                format_float(t.midpoint_drift),
                self.vanilla_stuck(t),
                self.two_round_ok(t),
            );
        }
        let (need_stuck, need_ok) = self.required();
        let _ = writeln!(
            s,
            "vanilla stuck (c1 error > sqrt(n)): {}/{} (need {need_stuck})",
            self.stuck_count(),
            self.trials.len()
        );
        let _ = writeln!(
            s,
            "two-round ok (max error < sqrt(n)/4): {}/{} (need {need_ok})",
            self.success_count(),
            self.trials.len()
        );
        let verdict = match self.passed() {
            None => "advisory",
            Some(true) => "pass",
            Some(false) => "fail",
        };
        let _ = writeln!(s, "verdict: {verdict}");
        s
    }
}

/// Equal-weight, unit-variance clusters spaced `3√n` apart on one axis.
pub fn figure1_model(n: usize, k: usize) -> Result<MixtureModel, CliError> {
    Ok(MixtureRecipe::new(k, n, 3.0, 1.0, Layout::Collinear).build(0)?)
}

/// Seed indices missing cluster 1: one point from cluster 2, two from
/// cluster 3, one from each later cluster.
pub fn missed_cluster_seeds(labels: &[usize], k: usize, seed: u64) -> Result<Vec<usize>, CliError> {
    let mut members = vec![Vec::new(); k];
    for (x, &l) in labels.iter().enumerate() {
        members[l].push(x);
    }
    let mut rng = Rng::new(seed);
    let mut out = Vec::with_capacity(k);
    for (cluster, count) in (1..k).map(|c| (c, if c == 2 { 2 } else { 1 })) {
        let pool = &members[cluster];
        if pool.len() < count {
            return Err(CliError::Data(format!(
                "cluster {} has {} points, need {count}",
                cluster + 1,
                pool.len()
            )));
        }
        out.extend(rng.sample_indices(pool.len(), count).into_iter().map(|i| pool[i]));
    }
    Ok(out)
}

pub fn demo_figure1(params: &Figure1Params) -> Result<Figure1Report, CliError> {
    let (n, k) = (params.n, params.k);
    if n < 16 || k < 3 {
        return Err(CliError::Usage(format!(
            "demo needs n ≥ 16 and k ≥ 3 (got n = {n}, k = {k})"
        )));
    }
    if params.trials == 0 {
        return Err(CliError::Usage("trials must be positive".into()));
    }
    let model = figure1_model(n, k)?;
    let l = choose_l(k, 1.0 / k as f64)?;
    if params.m < l.max(2 * k) {
        return Err(CliError::Usage(format!(
            "m = {} is below max(l, 2k) = {}",
            params.m,
            l.max(2 * k)
        )));
    }
    let midpoint: Vec<f64> = model
        .mean(0)
        .iter()
        .zip(model.mean(1))
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let gap = math::dist(model.mean(0), model.mean(1));

    let mut trials = Vec::with_capacity(params.trials);
    for t in 0..params.trials as u64 {
        let ts = child_seed(params.seed, "trial", t);
        let data = sample(&model, params.m, child_seed(ts, "sample", 0))?;
        let labels = data.labels_for(k)?;
        let seeds = missed_cluster_seeds(labels, k, child_seed(ts, "vanilla-seeds", 0))?;
        let mut state = init_from_indices(data.points(), &seeds, VarianceMode::Common)?;
        let mut drift: f64 = 0.0;
        for _ in 0..params.iters {
            state = em_round(data.points(), &state)?;
            drift = drift.max(math::dist(&state.centers()[0], &midpoint) / gap);
        }
        let vanilla = evaluate_fit(&state, &data, &model)?;

        let cfg = TwoRoundConfig::new(k, l, VarianceMode::Common, child_seed(ts, "fit", 0));
        let two_round_max_error = match two_round_em(data.points(), &cfg) {
            Ok(r) => Some(evaluate_fit(&r.final_state, &data, &model)?.max_error()),
            Err(twoem_core::Error::PruningStarved { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        trials.push(Figure1Trial {
            vanilla_component1_error: vanilla.per_center_error[0],
            vanilla_max_error: vanilla.max_error(),
            midpoint_drift: drift,
            two_round_max_error,
        });
    }
    Ok(Figure1Report {
        params: params.clone(),
        l,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchParams {
    pub ns: Vec<usize>,
    pub cs: Vec<f64>,
    pub k: usize,
    pub m: usize,
    pub trials: usize,
    /// Vanilla EM iterations `T`.
    pub iters: usize,
    pub seed: u64,
}

impl Default for BenchParams {
    fn default() -> Self {
        Self {
            ns: vec![64, 128],
            cs: vec![0.75, 1.5],
            k: 4,
            m: 4000,
            trials: 5,
            iters: 10,
            seed: 0,
        }
    }
}

/// One grid cell. Errors are `d(θ, θ*)`, the largest matched center error,
/// averaged over trials; failed two-round trials are left out of the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub c: f64,
    pub k: usize,
    pub m: usize,
    pub l: usize,
    pub trials: usize,
    pub two_round_failures: usize,
    pub two_round_error: f64,
    pub vanilla_error_iter2: f64,
    pub vanilla_error_final: f64,
    /// Fraction of trials where two-round error ≤ vanilla error after two
    /// iterations (failed trials count as losses).
    pub two_round_le_vanilla2: f64,
    pub two_round_ms: f64,
    pub vanilla_ms: f64,
    /// Mean vanilla error after each iteration.
    pub vanilla_trace: Vec<f64>,
}

impl BenchRow {
    pub fn two_round_wins(&self) -> bool {
        self.two_round_error <= self.vanilla_error_iter2
    }
}

fn max_matched_error(state: &EmState, model: &MixtureModel) -> Result<f64, CliError> {
    let matching = match_centers(state.centers(), model)?;
    Ok((0..model.k())
        .map(|i| math::dist(&state.centers()[matching.estimate_for(i)], model.mean(i)))
        .fold(0.0, f64::max))
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn bench_cell(params: &BenchParams, n: usize, c: f64, cell_seed: u64) -> Result<BenchRow, CliError> {
    let k = params.k;
    let l = choose_l(k, 1.0 / k as f64)?;
    let model = MixtureRecipe::new(k, n, c, 1.0, Layout::RandomDirections).build(child_seed(cell_seed, "model", 0))?;
    let iters = params.iters;
    let mut two_round_errors = Vec::new();
    let mut vanilla_final = Vec::new();
    let mut vanilla_iter2 = Vec::new();
    let mut trace_sum = vec![0.0; iters];
    let mut wins = 0usize;
    let mut failures = 0usize;
    let (mut two_round_ms, mut vanilla_ms) = (0.0, 0.0);

    for t in 0..params.trials as u64 {
        let ts = child_seed(cell_seed, "trial", t);
        let data = sample(&model, params.m, child_seed(ts, "sample", 0))?;
        let points: &Points = data.points();

        let cfg = TwoRoundConfig::new(k, l, VarianceMode::Common, child_seed(ts, "fit", 0));
        let start = Instant::now();
        let fit = two_round_em(points, &cfg);
        two_round_ms += ms_since(start);
        let two_round_error = match fit {
            Ok(r) => Some(max_matched_error(&r.final_state, &model)?),
            Err(twoem_core::Error::PruningStarved { .. }) => {
                failures += 1;
                None
            }
            Err(e) => return Err(e.into()),
        };

        let vcfg = TwoRoundConfig::new(k, k, VarianceMode::Common, child_seed(ts, "vanilla", 0));
        let mut state = init(points, &vcfg)?.state;
        let mut trace = Vec::with_capacity(iters);
        for _ in 0..iters {
            let start = Instant::now();
            state = em_round(points, &state)?;
            vanilla_ms += ms_since(start);
            trace.push(max_matched_error(&state, &model)?);
        }
        let final_error = trace.last().copied().unwrap_or(max_matched_error(&state, &model)?);
        let iter2 = trace.get(1).copied().unwrap_or(final_error);
        for (acc, e) in trace_sum.iter_mut().zip(&trace) {
            *acc += e;
        }
        if let Some(e) = two_round_error {
            two_round_errors.push(e);
            if e <= iter2 {
                wins += 1;
            }
        }
        vanilla_final.push(final_error);
        vanilla_iter2.push(iter2);
    }
    let trials = params.trials as f64;
    Ok(BenchRow {
        n,
        c,
        k,
        m: params.m,
        l,
        trials: params.trials,
        two_round_failures: failures,
        two_round_error: mean(&two_round_errors),
        vanilla_error_iter2: mean(&vanilla_iter2),
        vanilla_error_final: mean(&vanilla_final),
        two_round_le_vanilla2: wins as f64 / trials,
        two_round_ms,
        vanilla_ms,
        vanilla_trace: trace_sum.iter().map(|s| s / trials).collect(),
    })
}

/// Runs every `(n, c)` cell, `n` outermost. Cell `i` in that order draws
/// its randomness from `child_seed(seed, "cell", i)`.
pub fn bench(params: &BenchParams) -> Result<Vec<BenchRow>, CliError> {
    if params.k < 2 {
        return Err(CliError::Usage("bench needs k ≥ 2".into()));
    }
    if params.trials == 0 {
        return Err(CliError::Usage("trials must be positive".into()));
    }
    let l = choose_l(params.k, 1.0 / params.k as f64)?;
    if params.m < l.max(2 * params.k) {
        return Err(CliError::Usage(format!(
            "m = {} is below max(l, 2k) = {}",
            params.m,
            l.max(2 * params.k)
        )));
    }
    let mut rows = Vec::new();
    for &n in &params.ns {
        for &c in &params.cs {
            let cell = rows.len() as u64;
            rows.push(bench_cell(params, n, c, child_seed(params.seed, "cell", cell))?);
        }
    }
    Ok(rows)
}

/// Tidy CSV, one row per cell. Timing columns are omitted when `timing` is
/// false so that output is reproducible byte for byte.
pub fn bench_csv(rows: &[BenchRow], timing: bool) -> String {
    let mut header = vec![
        "n",
        "c",
        "k",
        "m",
        "l",
        "trials",
        "two_round_failures",
        "two_round_error",
        "vanilla_error_iter2",
        "vanilla_error_final",
        "two_round_le_vanilla2",
    ];
    if timing {
        header.extend(["two_round_ms", "vanilla_ms"]);
    }
    header.push("vanilla_error_trace");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        let mut rec = vec![
            r.n.to_string(),
            r.c.to_string(),
            r.k.to_string(),
            r.m.to_string(),
            r.l.to_string(),
            r.trials.to_string(),
            r.two_round_failures.to_string(),
            format_float(r.two_round_error),
            format_float(r.vanilla_error_iter2),
            format_float(r.vanilla_error_final),
            r.two_round_le_vanilla2.to_string(),
        ];
        if timing {
            rec.push(format!("{:.3}", r.two_round_ms));
            rec.push(format!("{:.3}", r.vanilla_ms));
        }
        rec.push(
            r.vanilla_trace
                .iter()
                .map(|&e| format_float(e))
                .collect::<Vec<_>>()
                .join(";"),
        );
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missed_cluster_seeds_skip_the_first_cluster() {
        let labels: Vec<usize> = (0..50).map(|i| i % 5).collect();
        let seeds = missed_cluster_seeds(&labels, 5, 3).unwrap();
        let origin: Vec<usize> = seeds.iter().map(|&s| labels[s]).collect();
        assert_eq!(origin, vec![1, 2, 2, 3, 4]);
        assert_ne!(seeds[1], seeds[2]);
    }

    #[test]
    fn empty_grid_is_header_only() {
        let p = BenchParams {
            ns: vec![],
            ..BenchParams::default()
        };
        let rows = bench(&p).unwrap();
        assert!(rows.is_empty());
        assert_eq!(bench_csv(&rows, false).lines().count(), 1);
    }

    #[test]
    fn small_demo_is_advisory() {
        let p = Figure1Params {
            n: 16,
            k: 3,
            m: 300,
            trials: 2,
            iters: 5,
            seed: 1,
        };
        let r = demo_figure1(&p).unwrap();
        assert!(r.advisory());
        assert_eq!(r.passed(), None);
        assert!(r.to_text().contains("verdict: advisory"));
        assert!(demo_figure1(&Figure1Params { k: 2, ..p }).is_err());
    }
}
