//! Command-line driver: CSV ingestion, synthetic data, fitting, tuning,
//! prediction, benchmarking and manifest replay.

pub mod args;
pub mod bench;
pub mod commands;
pub mod error;
pub mod ingest;
pub mod manifest;
pub mod synth;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, CliResult, EXIT_OK, EXIT_USAGE};
use manifest::RunConfig;

fn split_file(path: &Path) -> CliResult<(PathBuf, String)> {
    let file = path
        .file_name()
        .and_then(|f| f.to_str())
        .ok_or_else(|| CliError::Usage(format!("{} is not a file path", path.display())))?;
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    Ok((dir.to_path_buf(), file.to_owned()))
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Fit(a) => commands::execute(&a.resolve(), a.seed, &a.out_dir),
        Command::Tune(a) => commands::execute(&a.resolve(), a.seed, &a.out_dir),
        Command::Synth(a) => {
            let (dir, file) = split_file(&a.out)?;
            commands::execute(&RunConfig::Synth { synth: a.config(), file }, a.seed, &dir)
        }
        Command::Benchmark(a) => {
            let (dir, file) = split_file(&a.out)?;
            commands::execute(&RunConfig::Benchmark { bench: a.config(), file }, a.seed, &dir)
        }
        Command::Predict(a) => commands::predict(&a.model, &a.data, !a.no_header, a.k, &a.out),
        Command::Replay(a) => commands::replay(&a.manifest, &a.out_dir),
        Command::Divergence(a) => commands::export_divergence(&a.model, &a.out),
    }
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
