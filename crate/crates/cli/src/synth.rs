//! Synthetic datasets for the three tasks.

use std::io::Write;

use cvxfit::numerics::Dataset;
use cvxfit::tuner::Task;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub task: Task,
    pub n: usize,
    pub d: usize,
    /// Standard deviation of the additive Gaussian noise (regression tasks).
    pub noise: f64,
    pub seed: u64,
}

/// Regression: `x ~ U[−1, 1]^d` with `y = ‖x‖²` (convex) or `‖x‖₁ − ‖x‖²`
/// (dc), plus noise. Classification: unit-variance blobs centred at
/// `±2 e₁`, alternating labels.
pub fn generate(cfg: &SynthConfig) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (n, d) = (cfg.n, cfg.d);
    let mut x = Array2::zeros((n, d));
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let mut row = x.row_mut(i);
        match cfg.task {
            Task::Bregman => {
                let label = (i % 2) as f64;
                for v in row.iter_mut() {
                    *v = rng.sample::<f64, _>(StandardNormal);
                }
                row[0] += 4.0 * label - 2.0;
                y[i] = label;
            }
            task => {
                for v in row.iter_mut() {
                    *v = rng.random_range(-1.0..=1.0);
                }
                let sq = row.dot(&row);
                let clean = match task {
                    Task::Convex => sq,
                    _ => row.iter().map(|v| v.abs()).sum::<f64>() - sq,
                };
                let eps: f64 = if cfg.noise > 0.0 { rng.sample::<f64, _>(StandardNormal) } else { 0.0 };
                y[i] = clean + cfg.noise * eps;
            }
        }
    }
    Dataset::new(x, y).expect("generated data is finite")
}

/// Header `x1,…,xd,y`; numbers in shortest round-trip form.
pub fn write_csv<W: Write>(data: &Dataset, mut w: W) -> std::io::Result<()> {
    let names: Vec<String> = (1..=data.d()).map(|j| format!("x{j}")).collect();
    writeln!(w, "{},y", names.join(","))?;
    for (row, y) in data.x().rows().into_iter().zip(data.y()) {
        for v in row {
            write!(w, "{v},")?;
        }
        writeln!(w, "{y}")?;
    }
    Ok(())
}
