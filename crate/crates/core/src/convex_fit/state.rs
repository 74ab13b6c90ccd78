use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rayon::prelude::*;

use crate::numerics::{l_update, parallel, OmegaFactor, Precompute};

use super::Monotone;

/// All primal and dual variables of one convex ADMM copy.
///
/// Scaled duals are stored, so each constraint family enters the augmented
/// Lagrangian as `(ρ/2)‖residual + dual‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexAdmmState {
    pub y_hat: Array1<f64>,
    pub a: Array2<f64>,
    pub l: Array1<f64>,
    pub p_plus: Array2<f64>,
    pub p_minus: Array2<f64>,
    pub u: Array2<f64>,
    pub s: Array2<f64>,
    pub alpha: Array2<f64>,
    pub gamma: Array2<f64>,
    pub eta: Array2<f64>,
    pub sum_y_hat: Array1<f64>,
    pub sum_a: Array2<f64>,
    /// Completed iterations.
    pub t: usize,
}

/// Largest absolute primal residual of each constraint family.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Residuals {
    pub convexity: f64,
    pub bound: f64,
    pub split: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.convexity.max(self.bound).max(self.split)
    }
}

impl ConvexAdmmState {
    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            y_hat: Array1::zeros(n),
            a: Array2::zeros((n, d)),
            l: Array1::zeros(d),
            p_plus: Array2::zeros((n, d)),
            p_minus: Array2::zeros((n, d)),
            u: Array2::zeros((n, d)),
            s: Array2::zeros((n, n)),
            alpha: Array2::zeros((n, n)),
            gamma: Array2::zeros((n, d)),
            eta: Array2::zeros((n, d)),
            sum_y_hat: Array1::zeros(n),
            sum_a: Array2::zeros((n, d)),
            t: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.y_hat.len()
    }

    pub fn d(&self) -> usize {
        self.a.ncols()
    }

    /// Largest magnitude over every primal and dual entry; NaN if any entry is NaN.
    pub fn max_abs(&self) -> f64 {
        let arrays2 = [
            &self.a,
            &self.p_plus,
            &self.p_minus,
            &self.u,
            &self.s,
            &self.alpha,
            &self.gamma,
            &self.eta,
        ];
        let mut m = 0.0_f64;
        for v in self.y_hat.iter().chain(self.l.iter()).chain(arrays2.into_iter().flatten()) {
            if v.is_nan() {
                return f64::NAN;
            }
            m = m.max(v.abs());
        }
        m
    }

    /// Adds the current `(ŷ, a)` to the running sums and advances `t`.
    pub fn accumulate(&mut self) {
        self.sum_y_hat += &self.y_hat;
        self.sum_a += &self.a;
        self.t += 1;
    }

    /// Mean of `(ŷ, a)` over completed iterations (the current iterate before any).
    pub fn averaged(&self) -> (Array1<f64>, Array2<f64>) {
        if self.t == 0 {
            return (self.y_hat.clone(), self.a.clone());
        }
        let k = self.t as f64;
        (&self.sum_y_hat / k, &self.sum_a / k)
    }

    pub fn residuals(&self, x: ArrayView2<'_, f64>) -> Residuals {
        let r = convexity_residual(self.y_hat.view(), self.a.view(), x);
        self.residuals_with(r.view())
    }

    pub(crate) fn residuals_with(&self, r: ArrayView2<'_, f64>) -> Residuals {
        let convexity = Zip::from(&self.s)
            .and(r)
            .fold(0.0_f64, |m, s, r| m.max((s + r).abs()));
        let mut bound = 0.0_f64;
        let mut split = 0.0_f64;
        Zip::from(self.u.rows())
            .and(self.p_plus.rows())
            .and(self.p_minus.rows())
            .and(self.a.rows())
            .for_each(|u, pp, pm, a| {
                for c in 0..u.len() {
                    bound = bound.max((u[c] + pp[c] + pm[c] - self.l[c]).abs());
                    split = split.max((a[c] - pp[c] + pm[c]).abs());
                }
            });
        Residuals {
            convexity,
            bound,
            split,
        }
    }
}

/// `r_ij = v_i − v_j − ⟨a_i, x_i − x_j⟩`, the convexity constraint residual
/// before slack.
pub fn convexity_residual(
    values: ArrayView1<'_, f64>,
    a: ArrayView2<'_, f64>,
    x: ArrayView2<'_, f64>,
) -> Array2<f64> {
    let mut r = a.dot(&x.t());
    let g: Array1<f64> = Zip::from(a.rows()).and(x.rows()).map_collect(|ai, xi| ai.dot(&xi));
    let f = |(i, j): (usize, usize), e: &mut f64| {
        *e = if i == j { 0.0 } else { values[i] - values[j] - g[i] + *e };
    };
    if parallel(r.len()) {
        Zip::indexed(&mut r).par_for_each(f);
    } else {
        Zip::indexed(&mut r).for_each(f);
    }
    r
}

/// `θ_i = (1/n)(p⁺_i − p⁻_i − η_i + Σ_j (α_ij + s_ij)(x_i − x_j))`.
pub fn theta(state: &ConvexAdmmState, x: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = state.n() as f64;
    let m = &state.alpha + &state.s;
    let row_sums = m.sum_axis(Axis(1));
    let mx = m.dot(&x);
    let mut th = &state.p_plus - &state.p_minus - &state.eta - mx;
    Zip::from(th.rows_mut())
        .and(x.rows())
        .and(&row_sums)
        .for_each(|mut t, xi, &w| {
            t.scaled_add(w, &xi);
            t.mapv_inplace(|v| v / n);
        });
    th
}

/// `β_i = (1/n) Σ_j (α_ij − α_ji + s_ij − s_ji)`.
pub fn beta(state: &ConvexAdmmState) -> Array1<f64> {
    let n = state.n() as f64;
    let m = &state.alpha + &state.s;
    (m.sum_axis(Axis(1)) - m.sum_axis(Axis(0))) / n
}

/// `v_i = x_iᵀΛ_iθ_i + x_iᵀ(1/n)Σ_j Λ_jθ_j − (1/n)Σ_j x_jᵀΛ_jθ_j`.
pub fn v_vector(theta: ArrayView2<'_, f64>, x: ArrayView2<'_, f64>, pre: &Precompute) -> Array1<f64> {
    let w = pre.apply(theta);
    let xw: Array1<f64> = Zip::from(x.rows()).and(w.rows()).map_collect(|xi, wi| xi.dot(&wi));
    let w_bar = w.mean_axis(Axis(0)).expect("n ≥ 1");
    let xw_bar = xw.mean().expect("n ≥ 1");
    xw + x.dot(&w_bar) - xw_bar
}

/// `a_i = Λ_i(θ_i + v_i x_i + (1/n)Σ_k v_k x_k)` for anchor values `v`.
pub fn slopes_from_values(
    theta: ArrayView2<'_, f64>,
    values: ArrayView1<'_, f64>,
    x: ArrayView2<'_, f64>,
    pre: &Precompute,
) -> Array2<f64> {
    let n = values.len() as f64;
    let mean_vx = x.t().dot(&values) / n;
    let mut rhs = theta.to_owned();
    Zip::from(rhs.rows_mut())
        .and(x.rows())
        .and(values)
        .for_each(|mut r, xi, &v| {
            r.scaled_add(v, &xi);
            r += &mean_vx;
        });
    pre.apply(rhs.view())
}

/// Slope update for the current anchor values.
pub fn update_a(state: &ConvexAdmmState, x: ArrayView2<'_, f64>, pre: &Precompute) -> Array2<f64> {
    let th = theta(state, x);
    slopes_from_values(th.view(), state.y_hat.view(), x, pre)
}

/// Anchor-value update with the slopes eliminated; `factor` must be the
/// convex variant at `rho`.
pub fn update_y(
    state: &ConvexAdmmState,
    x: ArrayView2<'_, f64>,
    pre: &Precompute,
    factor: &OmegaFactor,
    y: ArrayView1<'_, f64>,
    rho: f64,
) -> Array1<f64> {
    let th = theta(state, x);
    values_rhs_solve(&th, state, x, pre, factor, y, rho)
}

pub(crate) fn values_rhs_solve(
    th: &Array2<f64>,
    state: &ConvexAdmmState,
    x: ArrayView2<'_, f64>,
    pre: &Precompute,
    factor: &OmegaFactor,
    y: ArrayView1<'_, f64>,
    rho: f64,
) -> Array1<f64> {
    let n = state.n() as f64;
    let data = 2.0 / (n * n * rho);
    let rhs = v_vector(th.view(), x, pre) - beta(state) + &y.mapv(|v| data * v);
    factor.solve(rhs.view())
}

/// Minimizes over `(L, u, p⁺, p⁻)`: `L` per column first, then the other
/// three in closed form from the fresh `L`.
pub fn update_bound_block(state: &mut ConvexAdmmState, lambda: f64, rho: f64, monotone: Monotone) {
    let (n, d) = (state.n(), state.d());
    let lor = lambda / rho;
    let column = |l: usize| -> (f64, Vec<[f64; 3]>) {
        let mut ws = Vec::with_capacity(n);
        let mut gam = Vec::with_capacity(n);
        let mut cs = Vec::with_capacity(n);
        for i in 0..n {
            let w = state.eta[[i, l]] + state.a[[i, l]];
            ws.push(w);
            gam.push(state.gamma[[i, l]]);
            cs.push(match monotone {
                Monotone::Off => w.abs(),
                Monotone::Increasing => w.max(0.0),
                Monotone::Decreasing => (-w).max(0.0),
            });
        }
        let bound = l_update(&gam, &cs, lor);
        let entries = (0..n)
            .map(|i| {
                let k = bound - gam[i];
                let u = (k - cs[i]).max(0.0);
                let pp = if monotone == Monotone::Decreasing {
                    0.0
                } else {
                    (0.5 * (k - u + ws[i])).max(0.0)
                };
                let pm = if monotone == Monotone::Increasing {
                    0.0
                } else {
                    (0.5 * (k - u - ws[i])).max(0.0)
                };
                [u, pp, pm]
            })
            .collect();
        (bound, entries)
    };
    let cols: Vec<(f64, Vec<[f64; 3]>)> = if parallel(n * d) {
        (0..d).into_par_iter().map(column).collect()
    } else {
        (0..d).map(column).collect()
    };
    for (l, (bound, entries)) in cols.into_iter().enumerate() {
        state.l[l] = bound;
        for (i, [u, pp, pm]) in entries.into_iter().enumerate() {
            state.u[[i, l]] = u;
            state.p_plus[[i, l]] = pp;
            state.p_minus[[i, l]] = pm;
        }
    }
}

/// `s_ij = (−α_ij − r_ij)⁺`.
pub(crate) fn update_slack(state: &mut ConvexAdmmState, r: ArrayView2<'_, f64>) {
    let zip = Zip::from(&mut state.s).and(&state.alpha).and(r);
    let f = |s: &mut f64, &al: &f64, &r: &f64| *s = (-al - r).max(0.0);
    if parallel(r.len()) {
        zip.par_for_each(f);
    } else {
        zip.for_each(f);
    }
}

/// Second block of one iteration: `L`, then `(u, p⁺, p⁻)`, then `s`.
pub fn update_second_block(
    state: &mut ConvexAdmmState,
    x: ArrayView2<'_, f64>,
    lambda: f64,
    rho: f64,
    monotone: Monotone,
) {
    update_bound_block(state, lambda, rho, monotone);
    let r = convexity_residual(state.y_hat.view(), state.a.view(), x);
    update_slack(state, r.view());
}

pub(crate) fn update_duals_with(state: &mut ConvexAdmmState, r: ArrayView2<'_, f64>) {
    let zip = Zip::from(&mut state.alpha).and(&state.s).and(r);
    let f = |al: &mut f64, &s: &f64, &r: &f64| *al += s + r;
    if parallel(r.len()) {
        zip.par_for_each(f);
    } else {
        zip.for_each(f);
    }
    Zip::from(&mut state.gamma)
        .and(&state.u)
        .and(&state.p_plus)
        .and(&state.p_minus)
        .and(state.l.broadcast(state.u.dim()).expect("L has one entry per column"))
        .for_each(|g, &u, &pp, &pm, &l| *g += u + pp + pm - l);
    Zip::from(&mut state.eta)
        .and(&state.a)
        .and(&state.p_plus)
        .and(&state.p_minus)
        .for_each(|e, &a, &pp, &pm| *e += a - pp + pm);
}

/// Scaled dual ascent on all three constraint families.
pub fn update_duals(state: &mut ConvexAdmmState, x: ArrayView2<'_, f64>) {
    let r = convexity_residual(state.y_hat.view(), state.a.view(), x);
    update_duals_with(state, r.view());
}

/// Penalized least-squares objective `(1/n)Σ(ŷ−y)² + λΣ_l max_i |a_il|`.
pub fn objective(y: ArrayView1<'_, f64>, y_hat: ArrayView1<'_, f64>, a: ArrayView2<'_, f64>, lambda: f64) -> f64 {
    let n = y.len() as f64;
    let loss = Zip::from(y).and(y_hat).fold(0.0, |acc, y, f| acc + (f - y) * (f - y)) / n;
    loss + lambda * column_bound_sum(a)
}

/// `Σ_l max_i |a_il|`.
pub fn column_bound_sum(a: ArrayView2<'_, f64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
        .sum()
}
