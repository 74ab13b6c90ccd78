//! Command execution. Every command that produces files goes through a
//! [`RunConfig`], so a manifest replays exactly what the flags did.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cvxfit::bregman_fit::write_divergence_csv;
use cvxfit::model::Model;
use cvxfit::tuner::{fit_task, tune, Task};
use ndarray::Array1;

use crate::bench;
use crate::error::{CliError, CliResult};
use crate::ingest::{ingest_csv, ingest_points};
use crate::manifest::{DataSource, RunConfig, RunManifest, MANIFEST_FILE};
use crate::synth;

pub const MODEL_FILE: &str = "model.json";
pub const FIT_REPORT_FILE: &str = "fit_report.csv";
pub const TUNE_REPORT_FILE: &str = "tune_report.csv";
pub const TUNE_SUMMARY_FILE: &str = "tune_summary.csv";
pub const DIVERGENCE_FILE: &str = "divergence.csv";

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(format!("creating {}", path.display()), e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CliResult<()> {
    let mut w = create(path)?;
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

fn load_data(src: &DataSource, task: Task) -> CliResult<cvxfit::numerics::Dataset> {
    let data = ingest_csv(&src.path, &src.target, src.header)?;
    if task == Task::Bregman {
        data.labels()?;
    }
    Ok(data)
}

fn save_model(model: &Model, dir: &Path) -> CliResult<()> {
    model.save(dir.join(MODEL_FILE))?;
    if let Model::Bregman(m) = model {
        write_with(&dir.join(DIVERGENCE_FILE), |w| write_divergence_csv(m, w))?;
    }
    Ok(())
}

/// Runs a resolved configuration, writing outputs (and the manifest) under
/// `out`: a directory for fit and tune, a directory holding `file` for
/// synth and benchmark.
pub fn execute(config: &RunConfig, seed: u64, out: &Path) -> CliResult<()> {
    ensure_dir(out)?;
    match config {
        RunConfig::Fit { data, task, fit } => {
            let dataset = load_data(data, *task)?;
            let (model, report) = fit_task(*task, &dataset, fit)?;
            save_model(&model, out)?;
            write_with(&out.join(FIT_REPORT_FILE), |w| report.write_csv(w))?;
            if let Some(last) = report.last() {
                println!("{} fit: {} iterations, objective {:.6e}", task.as_str(), last.iter, last.objective);
            }
        }
        RunConfig::Tune { data, tune: tc, fit } => {
            let dataset = load_data(data, tc.task)?;
            let tuned = tune(&dataset, tc, fit)?;
            save_model(&tuned.model, out)?;
            write_with(&out.join(TUNE_REPORT_FILE), |w| tuned.report.write_csv(w))?;
            write_with(&out.join(TUNE_SUMMARY_FILE), |w| {
                writeln!(w, "lambda,round,mean,std")?;
                for s in &tuned.report.summaries {
                    writeln!(w, "{},{},{},{}", s.lambda, s.round, s.mean, s.std)?;
                }
                Ok(())
            })?;
            write_with(&out.join(FIT_REPORT_FILE), |w| tuned.fit_report.write_csv(w))?;
            let best = tuned.report.best();
            println!("chosen lambda {} (mean {:?} {}, std {})", tuned.lambda, tc.metric, best.mean, best.std);
        }
        RunConfig::Synth { synth: cfg, file } => {
            let data = synth::generate(cfg);
            write_with(&out.join(file), |w| synth::write_csv(&data, w))?;
        }
        RunConfig::Benchmark { bench: cfg, file } => {
            let rows = bench::run(cfg)?;
            write_with(&out.join(file), |w| bench::write_csv(&rows, w))?;
            let e = bench::fit_exponents(&rows);
            let show = |v: Option<f64>| v.map_or("n/a".to_owned(), |v| format!("{v:.3}"));
            println!("per-iteration time exponents: n^{} d^{}", show(e.n), show(e.d));
        }
    }
    RunManifest::new(config.clone(), seed).write(&manifest_path(config, out))
}

/// Where [`execute`] puts the manifest for `config`.
pub fn manifest_path(config: &RunConfig, out: &Path) -> PathBuf {
    match config {
        RunConfig::Synth { file, .. } | RunConfig::Benchmark { file, .. } => {
            out.join(format!("{file}.{MANIFEST_FILE}"))
        }
        _ => out.join(MANIFEST_FILE),
    }
}

pub fn replay(manifest: &Path, out: &Path) -> CliResult<()> {
    let m = RunManifest::read(manifest)?;
    if m.version != env!("CARGO_PKG_VERSION") {
        log::warn!("manifest written by version {}, replaying with {}", m.version, env!("CARGO_PKG_VERSION"));
    }
    execute(&m.config, m.seed, out)
}

pub fn predict(model_path: &Path, points: &Path, header: bool, k: usize, out: &Path) -> CliResult<()> {
    let model = Model::load(model_path)?;
    let x = ingest_points(points, header)?;
    if x.ncols() != model.d() {
        return Err(CliError::Usage(format!(
            "model expects {} features, {} has {}",
            model.d(),
            points.display(),
            x.ncols()
        )));
    }
    let pred: Array1<f64> = match &model {
        Model::Convex(m) => m.predict(x.view())?,
        Model::Dc(m) => m.predict(x.view())?,
        Model::Bregman(m) => x
            .rows()
            .into_iter()
            .map(|r| m.predict_knn(r, k).map(f64::from))
            .collect::<cvxfit::Result<_>>()?,
    };
    write_with(out, |w| {
        writeln!(w, "prediction")?;
        pred.iter().try_for_each(|p| writeln!(w, "{p}"))
    })
}

pub fn export_divergence(model_path: &Path, out: &Path) -> CliResult<()> {
    let model = Model::load(model_path)?.into_bregman()?;
    write_with(out, |w| write_divergence_csv(&model, w))
}
