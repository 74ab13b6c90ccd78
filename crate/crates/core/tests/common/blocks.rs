//! One random instance per call: apply a closed-form block update and
//! return the worst scaled first-order violation of the transcribed
//! Lagrangian over that block. Sign constraints that fail return infinity.

use cvxfit::bregman_fit::{update_a_bregman, update_s_t, update_z, update_zeta, BregmanAdmmState};
use cvxfit::convex_fit::{update_a, update_bound_block, update_second_block, update_y, Monotone};
use cvxfit::dc_fit::{update_y_pair, DcAdmmState, DcFactors};
use cvxfit::numerics::{OmegaVariant, Precompute};
use cvxfit_oracles::fd::Coordinate;
use cvxfit_oracles::lagrangian::{BregmanLagrangian, BregmanPrimal, ConvexLagrangian, ConvexLayout, DcLagrangian};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::*;

fn dims(r: &mut ChaCha8Rng) -> (usize, usize) {
    (r.random_range(2..9), r.random_range(1..4))
}

fn second_block_coords(layout: ConvexLayout, monotone: Monotone) -> Vec<Coordinate> {
    let mut coords = nonneg(layout.l());
    coords.extend(nonneg(layout.u()));
    if monotone != Monotone::Decreasing {
        coords.extend(nonneg(layout.p_plus()));
    }
    if monotone != Monotone::Increasing {
        coords.extend(nonneg(layout.p_minus()));
    }
    coords.extend(nonneg(layout.s()));
    coords
}

fn all_nonneg<'a>(it: impl IntoIterator<Item = &'a f64>) -> bool {
    it.into_iter().all(|&v| v >= 0.0)
}

pub fn convex_first_block(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (n, d) = dims(&mut r);
    let (x, y) = centered_instance(&mut r, n, d);
    let mut st = random_state(&mut r, n, d);
    let rho = r.random_range(0.2..3.0);
    let lambda = r.random_range(0.05..1.0);
    let pre = Precompute::new(x.view());
    let factor = pre.factor(OmegaVariant::Convex { rho }).unwrap();
    st.y_hat = update_y(&st, x.view(), &pre, &factor, y.view(), rho);
    st.a = update_a(&st, x.view(), &pre);

    let p = problem(&x, &y);
    let lag = ConvexLagrangian { problem: &p, lambda, rho, duals: duals(&st) };
    let layout = lag.layout();
    let mut coords = free(layout.y_hat());
    coords.extend(free(layout.a()));
    worst_violation(|w| lag.value_flat(w), &primal(&st).flatten(), &coords)
}

pub fn convex_second_block(seed: u64, monotone: Monotone) -> f64 {
    let mut r = rng(seed);
    let (n, d) = dims(&mut r);
    let (x, y) = centered_instance(&mut r, n, d);
    let mut st = random_state(&mut r, n, d);
    let rho = r.random_range(0.2..3.0);
    let lambda = r.random_range(0.0..2.0);
    update_second_block(&mut st, x.view(), lambda, rho, monotone);
    let signs_ok = all_nonneg(st.l.iter().chain(&st.u).chain(&st.p_plus).chain(&st.p_minus).chain(&st.s))
        && (monotone != Monotone::Decreasing || st.p_plus.iter().all(|&v| v == 0.0))
        && (monotone != Monotone::Increasing || st.p_minus.iter().all(|&v| v == 0.0));
    if !signs_ok {
        return f64::INFINITY;
    }
    let p = problem(&x, &y);
    let lag = ConvexLagrangian { problem: &p, lambda, rho, duals: duals(&st) };
    let coords = second_block_coords(lag.layout(), monotone);
    worst_violation(|w| lag.value_flat(w), &primal(&st).flatten(), &coords)
}

fn shift(coords: Vec<Coordinate>, by: usize) -> Vec<Coordinate> {
    coords.into_iter().map(|c| Coordinate { index: c.index + by, ..c }).collect()
}

fn dc_point(st: &DcAdmmState) -> Vec<f64> {
    let mut w = primal(&st.copies[0]).flatten();
    w.extend(primal(&st.copies[1]).flatten());
    w
}

fn random_dc(r: &mut ChaCha8Rng) -> (Array2<f64>, Array1<f64>, DcAdmmState) {
    let (n, d) = dims(r);
    let (x, y) = centered_instance(r, n, d);
    let st = DcAdmmState { copies: [random_state(r, n, d), random_state(r, n, d)] };
    (x, y, st)
}

pub fn dc_first_block(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (x, y, mut st) = random_dc(&mut r);
    let rho = r.random_range(0.2..3.0);
    let pre = Precompute::new(x.view());
    let factors = DcFactors::new(&pre, rho).unwrap();
    let (y1, y2) = update_y_pair(&st, x.view(), &pre, &factors, y.view(), rho);
    st.copies[0].y_hat = y1;
    st.copies[1].y_hat = y2;
    for c in st.copies.iter_mut() {
        c.a = update_a(c, x.view(), &pre);
    }
    let p = problem(&x, &y);
    let lag = DcLagrangian { problem: &p, lambda: 0.4, rho, duals: [duals(&st.copies[0]), duals(&st.copies[1])] };
    let layout = lag.layout();
    let mut coords = Vec::new();
    for q in 0..2 {
        let mut c = free(layout.y_hat());
        c.extend(free(layout.a()));
        coords.extend(shift(c, q * layout.len()));
    }
    worst_violation(|w| lag.value_flat(w), &dc_point(&st), &coords)
}

pub fn dc_second_block(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (x, y, mut st) = random_dc(&mut r);
    let (lambda, rho) = (r.random_range(0.0..2.0), r.random_range(0.2..3.0));
    for c in st.copies.iter_mut() {
        update_second_block(c, x.view(), lambda, rho, Monotone::Off);
    }
    let p = problem(&x, &y);
    let lag = DcLagrangian { problem: &p, lambda, rho, duals: [duals(&st.copies[0]), duals(&st.copies[1])] };
    let layout = lag.layout();
    let mut coords = Vec::new();
    for q in 0..2 {
        coords.extend(shift(second_block_coords(layout, Monotone::Off), q * layout.len()));
    }
    worst_violation(|w| lag.value_flat(w), &dc_point(&st), &coords)
}

pub fn random_bregman(r: &mut ChaCha8Rng, n: usize, d: usize) -> BregmanAdmmState {
    let mut st = BregmanAdmmState::zeros(d, &labels(n));
    st.core = random_state(r, n, d);
    st.zeta = random_matrix(r, n, n, true);
    st.t = random_matrix(r, n, n, true);
    st.tau = random_matrix(r, n, n, false);
    st
}

fn bregman_point(st: &BregmanAdmmState) -> Vec<f64> {
    BregmanPrimal { core: primal(&st.core), t: flat2(&st.t), zeta: flat2(&st.zeta) }.flatten()
}

fn label_problem(x: &Array2<f64>) -> cvxfit_oracles::Problem {
    let y: Array1<f64> = labels(x.nrows()).iter().map(|&l| f64::from(l)).collect();
    problem(x, &y)
}

pub fn bregman_first_block(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (n, d) = dims(&mut r);
    let (x, _) = centered_instance(&mut r, n, d);
    let mut st = random_bregman(&mut r, n, d);
    let rho = r.random_range(0.2..3.0);
    let pre = Precompute::new(x.view());
    let factor = pre.factor(OmegaVariant::Bregman).unwrap();
    st.zeta = update_zeta(&st, rho);
    st.core.y_hat = update_z(&st, x.view(), &pre, &factor);
    st.core.a = update_a_bregman(&st, x.view(), &pre);
    if !all_nonneg(&st.zeta) {
        return f64::INFINITY;
    }
    let p = label_problem(&x);
    let lag = BregmanLagrangian { problem: &p, lambda: 0.3, rho, duals: duals(&st.core), tau: flat2(&st.tau) };
    let layout = lag.layout();
    let mut coords = free(layout.y_hat());
    coords.extend(free(layout.a()));
    let zeta = layout.len() + n * n;
    coords.extend(nonneg(zeta..zeta + n * n));
    worst_violation(|w| lag.value_flat(w), &bregman_point(&st), &coords)
}

pub fn bregman_second_block(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (n, d) = dims(&mut r);
    let (x, _) = centered_instance(&mut r, n, d);
    let mut st = random_bregman(&mut r, n, d);
    let (lambda, rho) = (r.random_range(0.0..2.0), r.random_range(0.2..3.0));
    update_bound_block(&mut st.core, lambda, rho, Monotone::Off);
    update_s_t(&mut st, x.view());
    if !all_nonneg(st.core.s.iter().chain(&st.t)) {
        return f64::INFINITY;
    }
    let p = label_problem(&x);
    let lag = BregmanLagrangian { problem: &p, lambda, rho, duals: duals(&st.core), tau: flat2(&st.tau) };
    let layout = lag.layout();
    let mut coords = second_block_coords(layout, Monotone::Off);
    coords.extend(nonneg(layout.len()..layout.len() + n * n));
    worst_violation(|w| lag.value_flat(w), &bregman_point(&st), &coords)
}
