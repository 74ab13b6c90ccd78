//! λ selection by k-fold cross-validation over a log grid, with optional
//! refinement rounds around the incumbent.

use std::io::Write;
use std::time::Instant;

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bregman_fit::fit_bregman_validated;
use crate::convex_fit::{fit_convex_validated, EarlyStop, FitConfig, FitReport, Rho};
use crate::dc_fit::fit_dc_validated;
use crate::error::{Error, Result};
use crate::model::{BregmanModel, Model};
use crate::numerics::Dataset;

/// ρ used while tuning unless the template overrides it.
pub const TUNING_RHO: f64 = 0.01;

const REFINE_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Convex,
    Dc,
    Bregman,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Convex => "convex",
            Self::Dc => "dc",
            Self::Bregman => "bregman",
        }
    }

    pub fn default_metric(self) -> Metric {
        match self {
            Self::Bregman => Metric::Accuracy,
            _ => Metric::Mse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Validation mean squared error in the original response units.
    Mse,
    /// k-NN accuracy under the learned divergence.
    Accuracy,
}

impl Metric {
    pub fn higher_is_better(self) -> bool {
        matches!(self, Self::Accuracy)
    }

    /// Value recorded for a fold whose fit failed.
    pub fn worst(self) -> f64 {
        if self.higher_is_better() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    }

    fn loss(self, value: f64) -> f64 {
        if self.higher_is_better() {
            -value
        } else {
            value
        }
    }
}

/// `10^-3, 10^-2, …, 10^3`.
pub fn default_grid() -> Vec<f64> {
    (-3..=3).map(|e| 10f64.powi(e)).collect()
}

/// Fit settings used inside the folds: fixed small ρ and early stopping on
/// validation error.
pub fn tuning_fit_config() -> FitConfig {
    let mut cfg = FitConfig::new(1.0);
    cfg.rho = Rho::Fixed(TUNING_RHO);
    cfg.early_stop = Some(EarlyStop::default());
    cfg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneConfig {
    pub grid: Vec<f64>,
    pub folds: usize,
    pub refine_rounds: usize,
    pub task: Task,
    pub metric: Metric,
    /// Neighbours for the accuracy metric.
    pub k: usize,
    pub seed: u64,
    /// Size of the worker pool; `None` uses rayon's default.
    pub workers: Option<usize>,
}

impl TuneConfig {
    pub fn new(task: Task) -> Self {
        Self {
            grid: default_grid(),
            folds: 5,
            refine_rounds: 2,
            task,
            metric: task.default_metric(),
            k: 5,
            seed: 0,
            workers: None,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.grid.is_empty() {
            return bad("the lambda grid is empty".into());
        }
        if self.grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return bad("grid values must be positive and finite".into());
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("grid must be strictly increasing".into());
        }
        if self.folds < 2 || self.folds > n {
            return bad(format!("folds must lie in [2, {n}], got {}", self.folds));
        }
        if self.refine_rounds > 2 {
            return bad(format!("at most 2 refinement rounds, got {}", self.refine_rounds));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.metric == Metric::Accuracy && self.task != Task::Bregman {
            return bad("accuracy is only defined for the bregman task".into());
        }
        if self.metric == Metric::Mse && self.task == Task::Bregman {
            return bad("the bregman task is scored by accuracy".into());
        }
        if self.workers == Some(0) {
            return bad("worker pool needs at least one thread".into());
        }
        Ok(())
    }
}

/// Fold index (`0..folds`) of every sample.
pub fn kfold_split(n: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds == 0 || folds > n {
        return Err(Error::InvalidConfig(format!("cannot split {n} samples into {folds} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignment[i] = pos % folds;
    }
    Ok(assignment)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldRecord {
    pub lambda: f64,
    pub fold: usize,
    pub metric: f64,
    pub iters_run: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaSummary {
    pub lambda: f64,
    /// Round in which λ was first evaluated.
    pub round: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub incumbent: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneReport {
    pub metric: Metric,
    pub folds: Vec<FoldRecord>,
    pub summaries: Vec<LambdaSummary>,
    pub history: Vec<RoundRecord>,
    pub chosen_lambda: f64,
}

impl TuneReport {
    pub fn summary(&self, lambda: f64) -> Option<&LambdaSummary> {
        self.summaries.iter().find(|s| s.lambda == lambda)
    }

    pub fn best(&self) -> &LambdaSummary {
        self.summary(self.chosen_lambda).expect("chosen lambda was evaluated")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "lambda,fold,metric,iters_run,seconds")?;
        for r in &self.folds {
            writeln!(w, "{},{},{},{},{:.6}", r.lambda, r.fold, r.metric, r.iters_run, r.seconds)?;
        }
        Ok(())
    }
}

/// Result of [`tune`]: the chosen λ, the CV record and the refit model.
#[derive(Debug, Clone)]
pub struct Tuned {
    pub lambda: f64,
    pub report: TuneReport,
    pub model: Model,
    pub fit_report: FitReport,
}

/// Fits `task` on `data` with the given configuration.
pub fn fit_task(task: Task, data: &Dataset, config: &FitConfig) -> Result<(Model, FitReport)> {
    fit_task_validated(task, data, None, 5, config)
}

fn fit_task_validated(
    task: Task,
    data: &Dataset,
    validation: Option<&Dataset>,
    k: usize,
    config: &FitConfig,
) -> Result<(Model, FitReport)> {
    Ok(match task {
        Task::Convex => {
            let (m, r) = fit_convex_validated(data, validation, config)?;
            (Model::Convex(m), r)
        }
        Task::Dc => {
            let (m, r) = fit_dc_validated(data, validation, config)?;
            (Model::Dc(m), r)
        }
        Task::Bregman => {
            let (m, r) = fit_bregman_validated(data, validation.map(|v| (v, k)), config)?;
            (Model::Bregman(m), r)
        }
    })
}

/// Fraction of rows whose k-NN label matches.
pub fn knn_accuracy(model: &BregmanModel, data: &Dataset, k: usize) -> Result<f64> {
    let labels = data.labels()?;
    let mut hits = 0;
    for (row, &label) in data.x().rows().into_iter().zip(&labels) {
        if model.predict_knn(row, k)? == label {
            hits += 1;
        }
    }
    Ok(hits as f64 / labels.len() as f64)
}

pub fn mse(pred: &Array1<f64>, y: &Array1<f64>) -> f64 {
    pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / y.len() as f64
}

/// `1 − SSE/SST`; NaN when the response is constant.
pub fn r_squared(pred: &Array1<f64>, y: &Array1<f64>) -> f64 {
    let mean = y.mean().unwrap_or(0.0);
    let sst: f64 = y.iter().map(|t| (t - mean) * (t - mean)).sum();
    1.0 - mse(pred, y) * y.len() as f64 / sst
}

/// Scores a fitted model on held-out data.
pub fn score(model: &Model, data: &Dataset, metric: Metric, k: usize) -> Result<f64> {
    let y = data.y().to_owned();
    match (model, metric) {
        (Model::Convex(m), Metric::Mse) => Ok(mse(&m.predict(data.x())?, &y)),
        (Model::Dc(m), Metric::Mse) => Ok(mse(&m.predict(data.x())?, &y)),
        (Model::Bregman(m), Metric::Accuracy) => knn_accuracy(m, data, k),
        (m, metric) => Err(Error::InvalidConfig(format!("metric {metric:?} does not apply to a {} model", m.kind()))),
    }
}

struct Split {
    train: Dataset,
    validation: Dataset,
}

fn splits(data: &Dataset, folds: usize, seed: u64) -> Result<Vec<Split>> {
    let assignment = kfold_split(data.n(), folds, seed)?;
    (0..folds)
        .map(|f| {
            let (val, train): (Vec<usize>, Vec<usize>) = (0..data.n()).partition(|&i| assignment[i] == f);
            Ok(Split {
                train: data.select(&train)?,
                validation: data.select(&val)?,
            })
        })
        .collect()
}

fn run_fold(split: &Split, lambda: f64, fold: usize, tc: &TuneConfig, template: &FitConfig) -> FoldRecord {
    let start = Instant::now();
    let mut cfg = template.clone();
    cfg.lambda = lambda;
    let outcome = fit_task_validated(tc.task, &split.train, Some(&split.validation), tc.k, &cfg)
        .and_then(|(model, report)| Ok((score(&model, &split.validation, tc.metric, tc.k)?, report.iterations())));
    let (metric, iters_run) = match outcome {
        Ok((m, iters)) if m.is_finite() => (m, iters),
        Ok((_, iters)) => (tc.metric.worst(), iters),
        Err(e) => {
            log::warn!("fold {fold} at lambda {lambda} failed: {e}");
            (tc.metric.worst(), 0)
        }
    };
    FoldRecord {
        lambda,
        fold,
        metric,
        iters_run,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn summarize(lambda: f64, round: usize, records: &[FoldRecord]) -> LambdaSummary {
    let m = records.len() as f64;
    let mean = records.iter().map(|r| r.metric).sum::<f64>() / m;
    let std = if mean.is_finite() {
        (records.iter().map(|r| (r.metric - mean).powi(2)).sum::<f64>() / m).sqrt()
    } else {
        f64::INFINITY
    };
    LambdaSummary { lambda, round, mean, std }
}

/// Best summary by metric; ties go to the smallest λ.
fn incumbent(summaries: &[LambdaSummary], metric: Metric) -> &LambdaSummary {
    summaries
        .iter()
        .min_by(|a, b| {
            metric
                .loss(a.mean)
                .total_cmp(&metric.loss(b.mean))
                .then(a.lambda.total_cmp(&b.lambda))
        })
        .expect("at least one lambda evaluated")
}

fn log_space(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|k| match k {
            0 => lo,
            k if k == points - 1 => hi,
            k => (a + (b - a) * k as f64 / (points - 1) as f64).exp(),
        })
        .collect()
}

fn same_lambda(a: f64, b: f64) -> bool {
    (a.ln() - b.ln()).abs() <= 1e-9
}

/// Cross-validates every grid λ, refines around the incumbent, then refits
/// on all of `data` at the chosen λ.
pub fn tune(data: &Dataset, tc: &TuneConfig, template: &FitConfig) -> Result<Tuned> {
    tc.validate(data.n())?;
    template.validate()?;
    if tc.task == Task::Bregman {
        data.labels()?;
    }
    let splits = splits(data, tc.folds, tc.seed)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = tc.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))?;

    let mut folds: Vec<FoldRecord> = Vec::new();
    let mut summaries: Vec<LambdaSummary> = Vec::new();
    let mut history = Vec::new();
    let mut round_grid = tc.grid.clone();

    for round in 0..=tc.refine_rounds {
        let fresh: Vec<f64> = round_grid
            .iter()
            .copied()
            .filter(|&l| !summaries.iter().any(|s| same_lambda(s.lambda, l)))
            .collect();
        let jobs: Vec<(f64, usize)> = fresh.iter().flat_map(|&l| (0..tc.folds).map(move |f| (l, f))).collect();
        let records: Vec<FoldRecord> = pool.install(|| {
            jobs.par_iter()
                .map(|&(l, f)| run_fold(&splits[f], l, f, tc, template))
                .collect()
        });
        for (lambda, chunk) in fresh.iter().zip(records.chunks(tc.folds)) {
            summaries.push(summarize(*lambda, round, chunk));
        }
        folds.extend(records);

        let best = incumbent(&summaries, tc.metric).clone();
        log::info!("round {round}: lambda {} mean metric {}", best.lambda, best.mean);
        history.push(RoundRecord {
            round,
            incumbent: best.lambda,
            mean: best.mean,
        });
        if round == tc.refine_rounds {
            break;
        }

        let mut pts: Vec<f64> = round_grid.clone();
        if !pts.iter().any(|&l| same_lambda(l, best.lambda)) {
            pts.push(best.lambda);
        }
        pts.sort_by(f64::total_cmp);
        let at = pts.iter().position(|&l| same_lambda(l, best.lambda)).expect("incumbent present");
        let lo = if at > 0 { pts[at - 1] } else { best.lambda };
        let hi = pts.get(at + 1).copied().unwrap_or(best.lambda);
        if same_lambda(lo, hi) {
            break;
        }
        round_grid = log_space(lo, hi, REFINE_POINTS);
        // Keep the incumbent addressable when the new grid straddles it.
        if !round_grid.iter().any(|&l| same_lambda(l, best.lambda)) {
            round_grid.push(best.lambda);
            round_grid.sort_by(f64::total_cmp);
        }
    }

    let chosen = incumbent(&summaries, tc.metric).lambda;
    let mut cfg = template.clone();
    cfg.lambda = chosen;
    let (model, fit_report) = pool.install(|| fit_task(tc.task, data, &cfg))?;
    Ok(Tuned {
        lambda: chosen,
        report: TuneReport {
            metric: tc.metric,
            folds,
            summaries,
            history,
            chosen_lambda: chosen,
        },
        model,
        fit_report,
    })
}
