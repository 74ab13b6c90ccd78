#![allow(dead_code)]

pub mod blocks;

use cvxfit::convex_fit::ConvexAdmmState;
use cvxfit_oracles::fd::{finite_difference_gradient, Coordinate};
use cvxfit_oracles::lagrangian::{ConvexDuals, ConvexPrimal};
use cvxfit_oracles::Problem;
use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Centered design with entries in [−1, 1] and a centered response.
pub fn centered_instance(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (Array2<f64>, Array1<f64>) {
    let mut x = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
    let mean = x.mean_axis(Axis(0)).unwrap();
    x -= &mean;
    let mut y = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
    let ym = y.mean().unwrap();
    y -= ym;
    (x, y)
}

pub fn labels(n: usize) -> Vec<u32> {
    (0..n).map(|i| (i % 2) as u32).collect()
}

fn fill1(rng: &mut ChaCha8Rng, n: usize, nonneg: bool) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| sample(rng, nonneg))
}

fn fill2(rng: &mut ChaCha8Rng, r: usize, c: usize, nonneg: bool) -> Array2<f64> {
    Array2::from_shape_fn((r, c), |_| sample(rng, nonneg))
}

fn sample(rng: &mut ChaCha8Rng, nonneg: bool) -> f64 {
    let v: f64 = rng.random_range(-1.0..1.0);
    if nonneg {
        v.abs()
    } else {
        v
    }
}

pub fn random_state(rng: &mut ChaCha8Rng, n: usize, d: usize) -> ConvexAdmmState {
    let mut st = ConvexAdmmState::zeros(n, d);
    st.y_hat = fill1(rng, n, false);
    st.a = fill2(rng, n, d, false);
    st.l = fill1(rng, d, true);
    st.u = fill2(rng, n, d, true);
    st.p_plus = fill2(rng, n, d, true);
    st.p_minus = fill2(rng, n, d, true);
    st.s = fill2(rng, n, n, true);
    st.alpha = fill2(rng, n, n, false);
    st.gamma = fill2(rng, n, d, false);
    st.eta = fill2(rng, n, d, false);
    st
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, nonneg: bool) -> Array2<f64> {
    fill2(rng, r, c, nonneg)
}

pub fn problem(x: &Array2<f64>, y: &Array1<f64>) -> Problem {
    let rows: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
    Problem::new(&rows, y.as_slice().unwrap())
}

pub fn flat2(a: &Array2<f64>) -> Vec<f64> {
    a.iter().copied().collect()
}

pub fn primal(st: &ConvexAdmmState) -> ConvexPrimal {
    ConvexPrimal {
        y_hat: st.y_hat.to_vec(),
        a: flat2(&st.a),
        l: st.l.to_vec(),
        u: flat2(&st.u),
        p_plus: flat2(&st.p_plus),
        p_minus: flat2(&st.p_minus),
        s: flat2(&st.s),
    }
}

pub fn duals(st: &ConvexAdmmState) -> ConvexDuals {
    ConvexDuals {
        alpha: flat2(&st.alpha),
        gamma: flat2(&st.gamma),
        eta: flat2(&st.eta),
    }
}

pub fn free(range: std::ops::Range<usize>) -> Vec<Coordinate> {
    range.map(Coordinate::free).collect()
}

pub fn nonneg(range: std::ops::Range<usize>) -> Vec<Coordinate> {
    range.map(Coordinate::nonneg).collect()
}

/// Worst first-order violation over `coords`, each scaled by `1 + |coordinate|`.
pub fn worst_violation<F: Fn(&[f64]) -> f64>(f: F, point: &[f64], coords: &[Coordinate]) -> f64 {
    finite_difference_gradient(f, point, coords, FD_STEP)
        .iter()
        .zip(coords)
        .map(|(p, c)| p.violation() / (1.0 + point[c.index].abs()))
        .fold(0.0, f64::max)
}
