use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cvxfit::convex_fit::{EarlyStop, FitConfig, Monotone, Rho};
use cvxfit::tuner::{default_grid, tuning_fit_config, Task, TuneConfig};

use crate::bench::BenchConfig;
use crate::ingest::Target;
use crate::manifest::{DataSource, RunConfig};
use crate::synth::SynthConfig;

#[derive(Debug, Parser)]
#[command(name = "cvxfit", version, about = "Fit convex, DC and Bregman-generator models with ADMM")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model at a fixed lambda.
    Fit(FitArgs),
    /// Evaluate a saved model on a CSV of feature rows.
    Predict(PredictArgs),
    /// Choose lambda by cross-validation and refit.
    Tune(TuneArgs),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
    /// Time solver iterations over an (n, d) grid.
    Benchmark(BenchArgs),
    /// Re-run a command from its manifest.
    Replay(ReplayArgs),
    /// Export the pairwise divergence matrix of a Bregman model.
    Divergence(DivergenceArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TaskArg {
    Convex,
    Dc,
    Bregman,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Convex => Task::Convex,
            TaskArg::Dc => Task::Dc,
            TaskArg::Bregman => Task::Bregman,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum MonotoneArg {
    #[default]
    Off,
    Increasing,
    Decreasing,
}

impl From<MonotoneArg> for Monotone {
    fn from(m: MonotoneArg) -> Self {
        match m {
            MonotoneArg::Off => Monotone::Off,
            MonotoneArg::Increasing => Monotone::Increasing,
            MonotoneArg::Decreasing => Monotone::Decreasing,
        }
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Training CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Response column: header name or 1-based index (default: last).
    #[arg(long)]
    pub target: Option<String>,
    /// The CSV has no header row.
    #[arg(long)]
    pub no_header: bool,
}

impl DataArgs {
    fn source(&self) -> DataSource {
        DataSource {
            path: self.data.clone(),
            target: self.target.as_deref().map_or(Target::Last, Target::parse),
            header: !self.no_header,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = TaskArg::Convex)]
    pub task: TaskArg,
    /// Fixed ADMM penalty.
    #[arg(long, conflicts_with = "rho_auto")]
    pub rho: Option<f64>,
    /// Use sqrt(d) lambda^2 / n.
    #[arg(long)]
    pub rho_auto: bool,
    /// Iteration cap.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Stop when the monitored error stops improving.
    #[arg(long)]
    pub early_stop: bool,
    /// Iterations between early-stopping checks (default: n).
    #[arg(long, requires = "early_stop")]
    pub patience: Option<usize>,
    /// Smallest improvement that counts as progress.
    #[arg(long, requires = "early_stop")]
    pub min_improvement: Option<f64>,
    /// Return the averaged iterate.
    #[arg(long)]
    pub averaged: bool,
    #[arg(long, value_enum, default_value_t)]
    pub monotone: MonotoneArg,
}

impl SolverArgs {
    fn apply(&self, cfg: &mut FitConfig) {
        if let Some(r) = self.rho {
            cfg.rho = Rho::Fixed(r);
        } else if self.rho_auto {
            cfg.rho = Rho::Auto;
        }
        if let Some(t) = self.iters {
            cfg.max_iters = t;
        }
        if self.early_stop || self.patience.is_some() || self.min_improvement.is_some() {
            let mut es = cfg.early_stop.unwrap_or_default();
            es.window = self.patience.or(es.window);
            es.min_improvement = self.min_improvement.unwrap_or(es.min_improvement);
            cfg.early_stop = Some(es);
        }
        cfg.averaged_output |= self.averaged;
        cfg.monotone = self.monotone.into();
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub lambda: f64,
    /// Recorded in the manifest; fitting itself is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

impl FitArgs {
    pub fn resolve(&self) -> RunConfig {
        let mut fit = FitConfig::new(self.lambda);
        self.solver.apply(&mut fit);
        RunConfig::Fit { data: self.data.source(), task: self.solver.task.into(), fit }
    }
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Comma-separated lambda grid (default 1e-3,…,1e3).
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 2)]
    pub refine_rounds: usize,
    /// Neighbours for k-NN accuracy.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for fold fits.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

impl TuneArgs {
    pub fn resolve(&self) -> RunConfig {
        let task: Task = self.solver.task.into();
        let mut tune = TuneConfig::new(task);
        tune.grid = self.grid.clone().unwrap_or_else(default_grid);
        tune.folds = self.folds;
        tune.refine_rounds = self.refine_rounds;
        tune.k = self.k;
        tune.seed = self.seed;
        tune.workers = self.workers;
        let mut fit = tuning_fit_config();
        self.solver.apply(&mut fit);
        if fit.early_stop.is_none() {
            fit.early_stop = Some(EarlyStop::default());
        }
        RunConfig::Tune { data: self.data.source(), tune, fit }
    }
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV of feature rows in raw units.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub no_header: bool,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = TaskArg::Convex)]
    pub task: TaskArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

impl SynthArgs {
    pub fn config(&self) -> SynthConfig {
        SynthConfig { task: self.task.into(), n: self.n, d: self.d, noise: self.noise, seed: self.seed }
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [250, 500, 1000])]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [2, 8, 32])]
    pub d: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

impl BenchArgs {
    pub fn config(&self) -> BenchConfig {
        BenchConfig {
            ns: self.n.clone(),
            ds: self.d.clone(),
            iters: self.iters,
            lambda: self.lambda,
            rho: self.rho.map_or(Rho::Auto, Rho::Fixed),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct DivergenceArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}
