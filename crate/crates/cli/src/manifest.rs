//! Run manifests: everything needed to repeat a command exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cvxfit::convex_fit::FitConfig;
use cvxfit::tuner::{Task, TuneConfig};
use serde::{Deserialize, Serialize};

use crate::bench::BenchConfig;
use crate::error::{CliError, CliResult};
use crate::ingest::Target;
use crate::synth::SynthConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSource {
    pub path: PathBuf,
    pub target: Target,
    pub header: bool,
}

/// Fully resolved settings; defaults are materialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RunConfig {
    Fit { data: DataSource, task: Task, fit: FitConfig },
    Tune { data: DataSource, tune: TuneConfig, fit: FitConfig },
    Synth { synth: SynthConfig, file: String },
    Benchmark { bench: BenchConfig, file: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<PathBuf>,
    pub config: RunConfig,
    pub seed: u64,
    pub version: String,
}

impl RunManifest {
    pub fn new(config: RunConfig, seed: u64) -> Self {
        let (command, inputs) = match &config {
            RunConfig::Fit { data, .. } => ("fit", vec![data.path.clone()]),
            RunConfig::Tune { data, .. } => ("tune", vec![data.path.clone()]),
            RunConfig::Synth { .. } => ("synth", vec![]),
            RunConfig::Benchmark { .. } => ("benchmark", vec![]),
        };
        Self {
            command: command.into(),
            inputs,
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let ctx = || format!("writing {}", path.display());
        let mut w = BufWriter::new(File::create(path).map_err(|e| CliError::io(ctx(), e))?);
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(ctx(), e))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let file = File::open(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_json() {
        let m = RunManifest::new(RunConfig::Tune {
            data: DataSource { path: "d.csv".into(), target: Target::Name("y".into()), header: true },
            tune: TuneConfig::new(Task::Dc),
            fit: cvxfit::tuner::tuning_fit_config(),
        }, 0);
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<RunManifest>(&text).unwrap(), m);
        assert!(text.contains("\"kind\":\"tune\""));
    }
}
