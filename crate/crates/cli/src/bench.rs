//! Per-iteration timing of the convex solver over an `(n, d)` grid.

use std::io::Write;
use std::time::Instant;

use cvxfit::convex_fit::{ConvexSolver, FitConfig, Rho};
use cvxfit::numerics::{normalize, TargetKind};
use cvxfit::tuner::Task;
use serde::{Deserialize, Serialize};

use crate::synth::{generate, SynthConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub ns: Vec<usize>,
    pub ds: Vec<usize>,
    pub iters: usize,
    pub lambda: f64,
    pub rho: Rho,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            ns: vec![250, 500, 1000],
            ds: vec![2, 8, 32],
            iters: 50,
            lambda: 1.0,
            rho: Rho::Auto,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub d: usize,
    pub iters: usize,
    /// Normalization, per-sample inverses and factorization.
    pub setup_seconds: f64,
    pub seconds: f64,
    pub per_iter_seconds: f64,
}

pub fn run(cfg: &BenchConfig) -> cvxfit::Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        for &d in &cfg.ds {
            let data = generate(&SynthConfig { task: Task::Convex, n, d, noise: 0.1, seed: cfg.seed });
            let mut fit = FitConfig::new(cfg.lambda);
            fit.rho = cfg.rho;
            fit.max_iters = cfg.iters;
            let start = Instant::now();
            let (train, norm) = normalize(&data, TargetKind::Regression)?;
            let mut solver = ConvexSolver::new(&train, norm, &fit)?;
            let setup_seconds = start.elapsed().as_secs_f64();
            let start = Instant::now();
            for _ in 0..cfg.iters {
                solver.step()?;
            }
            let seconds = start.elapsed().as_secs_f64();
            log::info!("n={n} d={d}: {seconds:.3}s for {} iterations", cfg.iters);
            rows.push(BenchRow {
                n,
                d,
                iters: cfg.iters,
                setup_seconds,
                seconds,
                per_iter_seconds: seconds / cfg.iters as f64,
            });
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[BenchRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "n,d,iters,setup_seconds,seconds,per_iter_seconds")?;
    for r in rows {
        writeln!(w, "{},{},{},{:.6},{:.6},{:.9}", r.n, r.d, r.iters, r.setup_seconds, r.seconds, r.per_iter_seconds)?;
    }
    Ok(())
}

/// Exponents of `n` and `d` from least squares on
/// `log t = c + a log n + b log d`. A dimension with a single grid value
/// gets `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    pub n: Option<f64>,
    pub d: Option<f64>,
}

pub fn fit_exponents(rows: &[BenchRow]) -> Exponents {
    let distinct = |f: fn(&BenchRow) -> usize| {
        let mut v: Vec<usize> = rows.iter().map(f).collect();
        v.sort_unstable();
        v.dedup();
        v.len() > 1
    };
    let (use_n, use_d) = (distinct(|r| r.n), distinct(|r| r.d));
    let feats = |r: &BenchRow| {
        let mut f = vec![1.0];
        if use_n {
            f.push((r.n as f64).ln());
        }
        if use_d {
            f.push((r.d as f64).ln());
        }
        f
    };
    let k = 1 + usize::from(use_n) + usize::from(use_d);
    // Normal equations; k ≤ 3.
    let mut ata = vec![vec![0.0; k]; k];
    let mut atb = vec![0.0; k];
    for r in rows {
        let f = feats(r);
        let t = r.per_iter_seconds.ln();
        for i in 0..k {
            atb[i] += f[i] * t;
            for j in 0..k {
                ata[i][j] += f[i] * f[j];
            }
        }
    }
    let coef = solve_small(ata, atb);
    let mut it = coef.into_iter().skip(1);
    Exponents {
        n: if use_n { it.next() } else { None },
        d: if use_d { it.next() } else { None },
    }
}

fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let k = b.len();
    for c in 0..k {
        let p = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..k {
            let f = a[r][c] / a[c][c];
            for j in c..k {
                a[r][j] -= f * a[c][j];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; k];
    for c in (0..k).rev() {
        let s: f64 = (c + 1..k).map(|j| a[c][j] * x[j]).sum();
        x[c] = (b[c] - s) / a[c][c];
    }
    x
}
