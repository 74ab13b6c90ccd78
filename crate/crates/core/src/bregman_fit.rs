//! Learning a Bregman divergence from pair labels.
//!
//! The generator is a max-affine function sampled at the training points.
//! For each ordered pair the convexity slack `s_ij` equals the divergence
//! `D(x_j, x_i)`, and the pair loss `ζ_ij` is tied to it through
//! `ι s − ι + t + 1 − ζ = 0` with `t ≥ 0`: same-label pairs pay the
//! divergence itself, different-label pairs pay `(2 − D)⁺`. The loss enters
//! the objective as `(1/n) Σ ζ`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Zip};

use crate::convex_fit::{
    beta, check_divergence, column_bound_sum, convexity_residual, drive, slopes_from_values, theta,
    update_bound_block, update_duals_with, v_vector, ConvexAdmmState, FitConfig, FitReport, Iterate, Monotone,
    Residuals,
};
use crate::error::{Error, Result};
use crate::model::{BregmanModel, MaxAffineModel};
use crate::numerics::{normalize, Dataset, NormalizationState, OmegaFactor, OmegaVariant, Precompute, TargetKind};

#[derive(Debug, Clone, PartialEq)]
pub struct BregmanAdmmState {
    /// Shared variables; `core.y_hat` holds the generator values `z`.
    pub core: ConvexAdmmState,
    pub zeta: Array2<f64>,
    pub t: Array2<f64>,
    pub tau: Array2<f64>,
    /// `+1` for same-label pairs, `−1` otherwise.
    pub iota: Array2<f64>,
}

impl BregmanAdmmState {
    pub fn zeros(d: usize, labels: &[u32]) -> Self {
        let n = labels.len();
        Self {
            core: ConvexAdmmState::zeros(n, d),
            zeta: Array2::zeros((n, n)),
            t: Array2::zeros((n, n)),
            tau: Array2::zeros((n, n)),
            iota: pair_signs(labels),
        }
    }

    pub fn z(&self) -> ArrayView1<'_, f64> {
        self.core.y_hat.view()
    }

    fn max_abs(&self) -> f64 {
        let mut m = self.core.max_abs();
        for v in self.zeta.iter().chain(&self.t).chain(&self.tau) {
            if v.is_nan() {
                return f64::NAN;
            }
            m = m.max(v.abs());
        }
        m
    }
}

pub fn pair_signs(labels: &[u32]) -> Array2<f64> {
    let n = labels.len();
    Array2::from_shape_fn((n, n), |(i, j)| if labels[i] == labels[j] { 1.0 } else { -1.0 })
}

/// `ζ = (−1/(nρ) + τ + ιs − ι + t + 1)⁺`.
pub fn update_zeta(state: &BregmanAdmmState, rho: f64) -> Array2<f64> {
    let shift = -1.0 / (state.core.n() as f64 * rho);
    Zip::from(&state.tau)
        .and(&state.iota)
        .and(&state.core.s)
        .and(&state.t)
        .map_collect(|&tau, &io, &s, &t| (shift + tau + io * s - io + t + 1.0).max(0.0))
}

/// Generator values with the slopes eliminated: `Ω z = ν − β`.
pub fn update_z(
    state: &BregmanAdmmState,
    x: ArrayView2<'_, f64>,
    pre: &Precompute,
    factor: &OmegaFactor,
) -> Array1<f64> {
    let th = theta(&state.core, x);
    z_from_theta(&th, state, x, pre, factor)
}

fn z_from_theta(
    th: &Array2<f64>,
    state: &BregmanAdmmState,
    x: ArrayView2<'_, f64>,
    pre: &Precompute,
    factor: &OmegaFactor,
) -> Array1<f64> {
    let rhs = v_vector(th.view(), x, pre) - beta(&state.core);
    factor.solve(rhs.view())
}

pub fn update_a_bregman(state: &BregmanAdmmState, x: ArrayView2<'_, f64>, pre: &Precompute) -> Array2<f64> {
    let th = theta(&state.core, x);
    slopes_from_values(th.view(), state.z(), x, pre)
}

/// Joint minimizer of `(s − π²)² + (ιs + t − π¹)²` over `s, t ≥ 0`.
pub fn s_t_closed_form(iota: f64, pi1: f64, pi2: f64) -> (f64, f64) {
    let s = (0.5 * (pi2 + iota * pi1 - iota * (pi1 - iota * pi2).max(0.0))).max(0.0);
    let t = (pi1 - iota * s).max(0.0);
    (s, t)
}

/// Updates `s` and `t` from `π¹ = −τ + ι − 1 + ζ` and `π² = −α − r`.
pub fn update_s_t(state: &mut BregmanAdmmState, x: ArrayView2<'_, f64>) {
    let r = convexity_residual(state.core.y_hat.view(), state.core.a.view(), x);
    s_t_with(state, r.view());
}

fn s_t_with(state: &mut BregmanAdmmState, r: ArrayView2<'_, f64>) {
    let n = state.core.n();
    for i in 0..n {
        for j in 0..n {
            let io = state.iota[[i, j]];
            let pi1 = -state.tau[[i, j]] + io - 1.0 + state.zeta[[i, j]];
            let pi2 = -state.core.alpha[[i, j]] - r[[i, j]];
            let (s, t) = s_t_closed_form(io, pi1, pi2);
            state.core.s[[i, j]] = s;
            state.t[[i, j]] = t;
        }
    }
}

/// Dual ascent on all four constraint families.
pub fn update_duals_bregman(state: &mut BregmanAdmmState, x: ArrayView2<'_, f64>) {
    let r = convexity_residual(state.core.y_hat.view(), state.core.a.view(), x);
    duals_with(state, r.view());
}

fn duals_with(state: &mut BregmanAdmmState, r: ArrayView2<'_, f64>) {
    update_duals_with(&mut state.core, r);
    Zip::from(&mut state.tau)
        .and(&state.iota)
        .and(&state.core.s)
        .and(&state.t)
        .and(&state.zeta)
        .for_each(|tau, &io, &s, &t, &zeta| *tau += io * s - io + t + 1.0 - zeta);
}

/// `(1/n) Σ_{i≠j} (1 + ι_ij(D_ij − 1))⁺ + λ Σ_l max_i |a_il|` with the
/// divergences read off the iterate's `(z, a)`.
pub fn bregman_objective(
    iota: ArrayView2<'_, f64>,
    z: ArrayView1<'_, f64>,
    a: ArrayView2<'_, f64>,
    x: ArrayView2<'_, f64>,
    lambda: f64,
) -> f64 {
    let n = z.len();
    // D(x_j, x_i) = −r_ij.
    let r = convexity_residual(z, a, x);
    let mut loss = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                loss += (1.0 + iota[[i, j]] * (-r[[i, j]] - 1.0)).max(0.0);
            }
        }
    }
    loss / n as f64 + lambda * column_bound_sum(a)
}

#[derive(Debug, Clone)]
pub struct BregmanSolver {
    x: Array2<f64>,
    labels: Vec<u32>,
    norm: NormalizationState,
    pre: Precompute,
    factor: OmegaFactor,
    lambda: f64,
    rho: f64,
    monotone: Monotone,
    state: BregmanAdmmState,
    validation: Option<(Array2<f64>, Vec<u32>, usize)>,
}

impl BregmanSolver {
    /// `x` must be normalized.
    pub fn new(x: ArrayView2<'_, f64>, labels: Vec<u32>, norm: NormalizationState, config: &FitConfig) -> Result<Self> {
        config.validate()?;
        let (n, d) = x.dim();
        if n < 2 {
            return Err(Error::InvalidConfig("divergence learning needs at least two points".into()));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
        }
        if labels.iter().all(|&l| l == labels[0]) {
            log::warn!("all labels are identical; every pair is a same-label pair and the zero generator is optimal");
        }
        let rho = config.rho.resolve(n, d, config.lambda)?;
        let pre = Precompute::new(x);
        let factor = pre.factor(OmegaVariant::Bregman)?;
        let state = BregmanAdmmState::zeros(d, &labels);
        Ok(Self {
            x: x.to_owned(),
            labels,
            norm,
            pre,
            factor,
            lambda: config.lambda,
            rho,
            monotone: config.monotone,
            state,
            validation: None,
        })
    }

    /// Monitors the `k`-nearest-neighbour error rate on normalized points.
    pub fn set_validation(&mut self, x: Array2<f64>, labels: Vec<u32>, k: usize) {
        self.validation = Some((x, labels, k));
    }

    pub fn state(&self) -> &BregmanAdmmState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut BregmanAdmmState {
        &mut self.state
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// One iteration: `ζ`, `z`, `a`, then `(L, u, p⁺, p⁻)`, `(s, t)`, then the duals and `τ`.
    pub fn step(&mut self) -> Result<Residuals> {
        let x = self.x.view();
        let st = &mut self.state;
        st.zeta = update_zeta(st, self.rho);
        let th = theta(&st.core, x);
        st.core.y_hat = z_from_theta(&th, st, x, &self.pre, &self.factor);
        st.core.a = slopes_from_values(th.view(), st.core.y_hat.view(), x, &self.pre);
        update_bound_block(&mut st.core, self.lambda, self.rho, self.monotone);
        let r = convexity_residual(st.core.y_hat.view(), st.core.a.view(), x);
        s_t_with(st, r.view());
        duals_with(st, r.view());
        st.core.accumulate();
        check_divergence(st.max_abs(), st.core.t, self.rho)?;
        let mut res = st.core.residuals_with(r.view());
        let pair = Zip::from(&st.iota)
            .and(&st.core.s)
            .and(&st.t)
            .and(&st.zeta)
            .fold(0.0_f64, |m, &io, &s, &t, &z| m.max((io * s - io + t + 1.0 - z).abs()));
        res.convexity = res.convexity.max(pair);
        Ok(res)
    }

    pub fn objective(&self) -> f64 {
        let c = &self.state.core;
        bregman_objective(self.state.iota.view(), c.y_hat.view(), c.a.view(), self.x.view(), self.lambda)
    }

    pub fn model(&self, averaged: bool) -> BregmanModel {
        let (z, a) = if averaged {
            self.state.core.averaged()
        } else {
            (self.state.core.y_hat.clone(), self.state.core.a.clone())
        };
        let g = MaxAffineModel::new(self.x.clone(), a, z, self.norm.clone()).expect("finite iterates");
        BregmanModel::new(g, self.labels.clone()).expect("one label per anchor")
    }
}

impl Iterate for BregmanSolver {
    fn step(&mut self) -> Result<Residuals> {
        BregmanSolver::step(self)
    }

    fn objective(&self) -> f64 {
        BregmanSolver::objective(self)
    }

    fn monitor(&self, averaged: bool) -> f64 {
        match &self.validation {
            Some((x, labels, k)) => {
                let model = self.model(averaged);
                let norm = model.generator().norm().clone();
                let wrong = x
                    .rows()
                    .into_iter()
                    .zip(labels)
                    .filter(|(r, &l)| {
                        // Validation rows are already normalized; map back for the raw-unit API.
                        let raw = norm.invert_x(*r);
                        model.predict_knn(raw.view(), *k).map(|p| p != l).unwrap_or(true)
                    })
                    .count();
                wrong as f64 / labels.len() as f64
            }
            None if averaged => {
                let (z, a) = self.state.core.averaged();
                bregman_objective(self.state.iota.view(), z.view(), a.view(), self.x.view(), self.lambda)
            }
            None => self.objective(),
        }
    }

    fn n(&self) -> usize {
        self.labels.len()
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn rho(&self) -> f64 {
        self.rho
    }
}

/// Labels are read from the dataset's response column.
pub fn fit_bregman(data: &Dataset, config: &FitConfig) -> Result<(BregmanModel, FitReport)> {
    fit_bregman_validated(data, None, config)
}

pub fn fit_bregman_validated(
    data: &Dataset,
    validation: Option<(&Dataset, usize)>,
    config: &FitConfig,
) -> Result<(BregmanModel, FitReport)> {
    let labels = data.labels()?;
    let (train, norm) = normalize(data, TargetKind::Classification)?;
    let mut solver = BregmanSolver::new(train.x(), labels, norm.clone(), config)?;
    if let Some((v, k)) = validation {
        solver.set_validation(norm.apply_x_rows(v.x())?, v.labels()?, k);
    }
    let report = drive(&mut solver, config)?;
    Ok((solver.model(config.averaged_output), report))
}

/// Writes `D(x_i, x_j)` over the anchors as comma-separated rows.
pub fn write_divergence_csv<W: std::io::Write>(model: &BregmanModel, mut w: W) -> std::io::Result<()> {
    for row in model.divergence_matrix().rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}
