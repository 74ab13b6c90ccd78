//! Difference-of-convex regression: two convex ADMM copies whose fitted
//! values are coupled only through the loss on `ŷ¹ − ŷ²`.
//!
//! The joint value update splits into a difference system with matrix
//! `Ω + 2I/(n²ρ)` and a sum system with matrix `Ω − 2I/(n²ρ)`; everything
//! else runs per copy with the convex updates unchanged.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Zip};

use crate::convex_fit::{
    check_divergence, column_bound_sum, convexity_residual, drive, slopes_from_values, theta, update_bound_block,
    update_duals_with, update_slack, v_vector, beta, ConvexAdmmState, FitConfig, FitReport, Iterate, Monotone,
    Residuals,
};
use crate::error::Result;
use crate::model::{DcModel, MaxAffineModel};
use crate::numerics::{normalize, Dataset, NormalizationState, OmegaFactor, OmegaVariant, Precompute, TargetKind};

#[derive(Debug, Clone, PartialEq)]
pub struct DcAdmmState {
    pub copies: [ConvexAdmmState; 2],
}

impl DcAdmmState {
    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            copies: [ConvexAdmmState::zeros(n, d), ConvexAdmmState::zeros(n, d)],
        }
    }
}

/// The two factorizations the value update needs.
#[derive(Debug, Clone)]
pub struct DcFactors {
    /// `Ω + 2I/(n²ρ)`.
    pub plus: OmegaFactor,
    /// `Ω − 2I/(n²ρ)`.
    pub minus: OmegaFactor,
}

impl DcFactors {
    pub fn new(pre: &Precompute, rho: f64) -> Result<Self> {
        let plus = pre.factor(OmegaVariant::DcPlus { rho })?;
        let minus = pre.factor(OmegaVariant::DcMinus { rho })?;
        Ok(Self { plus, minus })
    }
}

/// `v^q − β^q` for both copies.
fn reduced_rhs(thetas: &[Array2<f64>; 2], state: &DcAdmmState, x: ArrayView2<'_, f64>, pre: &Precompute) -> [Array1<f64>; 2] {
    [0, 1].map(|q| v_vector(thetas[q].view(), x, pre) - beta(&state.copies[q]))
}

fn solve_pair(
    b: &[Array1<f64>; 2],
    factors: &DcFactors,
    y: ArrayView1<'_, f64>,
    rho: f64,
) -> (Array1<f64>, Array1<f64>) {
    let n = y.len() as f64;
    let data = 4.0 / (n * n * rho);
    // Grouped as data + (b¹ − b²) so that swapping the copies and negating y
    // negates the right-hand side exactly.
    let diff_rhs = Zip::from(y)
        .and(&b[0])
        .and(&b[1])
        .map_collect(|&y, &b1, &b2| data * y + (b1 - b2));
    let sum_rhs = &b[0] + &b[1];
    let diff = factors.plus.solve(diff_rhs.view());
    let sum = factors.minus.solve(sum_rhs.view());
    let y1 = Zip::from(&diff).and(&sum).map_collect(|&d, &s| 0.5 * d + 0.5 * s);
    let y2 = Zip::from(&diff).and(&sum).map_collect(|&d, &s| -0.5 * d + 0.5 * s);
    (y1, y2)
}

/// Joint value update for both copies.
pub fn update_y_pair(
    state: &DcAdmmState,
    x: ArrayView2<'_, f64>,
    pre: &Precompute,
    factors: &DcFactors,
    y: ArrayView1<'_, f64>,
    rho: f64,
) -> (Array1<f64>, Array1<f64>) {
    let thetas = [theta(&state.copies[0], x), theta(&state.copies[1], x)];
    solve_pair(&reduced_rhs(&thetas, state, x, pre), factors, y, rho)
}

/// `(1/n)Σ(ŷ¹ − ŷ² − y)² + λ Σ_q Σ_l max_i |a^q_il|`.
pub fn dc_objective(
    y: ArrayView1<'_, f64>,
    y1: ArrayView1<'_, f64>,
    y2: ArrayView1<'_, f64>,
    a1: ArrayView2<'_, f64>,
    a2: ArrayView2<'_, f64>,
    lambda: f64,
) -> f64 {
    let n = y.len() as f64;
    let loss = Zip::from(y)
        .and(y1)
        .and(y2)
        .fold(0.0, |acc, &y, &f1, &f2| acc + (f1 - f2 - y) * (f1 - f2 - y))
        / n;
    loss + lambda * (column_bound_sum(a1) + column_bound_sum(a2))
}

#[derive(Debug, Clone)]
pub struct DcSolver {
    x: Array2<f64>,
    y: Array1<f64>,
    norm: NormalizationState,
    pre: Precompute,
    factors: DcFactors,
    lambda: f64,
    rho: f64,
    monotone: Monotone,
    state: DcAdmmState,
    validation: Option<(Array2<f64>, Array1<f64>)>,
}

impl DcSolver {
    pub fn new(data: &Dataset, norm: NormalizationState, config: &FitConfig) -> Result<Self> {
        config.validate()?;
        let (n, d) = (data.n(), data.d());
        let rho = config.rho.resolve(n, d, config.lambda)?;
        let pre = Precompute::new(data.x());
        let factors = DcFactors::new(&pre, rho)?;
        Ok(Self {
            x: data.x().to_owned(),
            y: data.y().to_owned(),
            norm,
            pre,
            factors,
            lambda: config.lambda,
            rho,
            monotone: config.monotone,
            state: DcAdmmState::zeros(n, d),
            validation: None,
        })
    }

    pub fn set_validation(&mut self, x: Array2<f64>, y: Array1<f64>) {
        self.validation = Some((x, y));
    }

    pub fn state(&self) -> &DcAdmmState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut DcAdmmState {
        &mut self.state
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn step(&mut self) -> Result<Residuals> {
        let x = self.x.view();
        let thetas = [theta(&self.state.copies[0], x), theta(&self.state.copies[1], x)];
        let b = reduced_rhs(&thetas, &self.state, x, &self.pre);
        let (y1, y2) = solve_pair(&b, &self.factors, self.y.view(), self.rho);
        self.state.copies[0].y_hat = y1;
        self.state.copies[1].y_hat = y2;
        let mut res = Residuals::default();
        for (st, th) in self.state.copies.iter_mut().zip(&thetas) {
            st.a = slopes_from_values(th.view(), st.y_hat.view(), x, &self.pre);
            update_bound_block(st, self.lambda, self.rho, self.monotone);
            let r = convexity_residual(st.y_hat.view(), st.a.view(), x);
            update_slack(st, r.view());
            update_duals_with(st, r.view());
            st.accumulate();
            check_divergence(st.max_abs(), st.t, self.rho)?;
            let rq = st.residuals_with(r.view());
            res = Residuals {
                convexity: res.convexity.max(rq.convexity),
                bound: res.bound.max(rq.bound),
                split: res.split.max(rq.split),
            };
        }
        Ok(res)
    }

    pub fn objective(&self) -> f64 {
        let [c1, c2] = &self.state.copies;
        dc_objective(self.y.view(), c1.y_hat.view(), c2.y_hat.view(), c1.a.view(), c2.a.view(), self.lambda)
    }

    pub fn averaged_objective(&self) -> f64 {
        let (y1, a1) = self.state.copies[0].averaged();
        let (y2, a2) = self.state.copies[1].averaged();
        dc_objective(self.y.view(), y1.view(), y2.view(), a1.view(), a2.view(), self.lambda)
    }

    pub fn model(&self, averaged: bool) -> DcModel {
        let [phi1, phi2] = [0, 1].map(|q| {
            let st = &self.state.copies[q];
            let (v, a) = if averaged {
                st.averaged()
            } else {
                (st.y_hat.clone(), st.a.clone())
            };
            MaxAffineModel::new(self.x.clone(), a, v, self.norm.clone()).expect("finite iterates")
        });
        DcModel::new(phi1, phi2).expect("copies share anchors")
    }
}

impl Iterate for DcSolver {
    fn step(&mut self) -> Result<Residuals> {
        DcSolver::step(self)
    }

    fn objective(&self) -> f64 {
        DcSolver::objective(self)
    }

    fn monitor(&self, averaged: bool) -> f64 {
        match &self.validation {
            Some((x, y)) => {
                let model = self.model(averaged);
                let sq: f64 = x
                    .rows()
                    .into_iter()
                    .zip(y)
                    .map(|(r, &t)| (model.evaluate_normalized(r) - t).powi(2))
                    .sum();
                sq / y.len() as f64
            }
            None if averaged => self.averaged_objective(),
            None => self.objective(),
        }
    }

    fn n(&self) -> usize {
        self.y.len()
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn rho(&self) -> f64 {
        self.rho
    }
}

pub fn fit_dc(data: &Dataset, config: &FitConfig) -> Result<(DcModel, FitReport)> {
    fit_dc_validated(data, None, config)
}

pub fn fit_dc_validated(
    data: &Dataset,
    validation: Option<&Dataset>,
    config: &FitConfig,
) -> Result<(DcModel, FitReport)> {
    let (train, norm) = normalize(data, TargetKind::Regression)?;
    let mut solver = DcSolver::new(&train, norm.clone(), config)?;
    if let Some(v) = validation {
        solver.set_validation(norm.apply_x_rows(v.x())?, v.y().mapv(|t| norm.apply_y(t)));
    }
    let report = drive(&mut solver, config)?;
    Ok((solver.model(config.averaged_output), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex_fit::{fit_convex, Rho};
    use ndarray::array;

    fn grid(n: usize, f: impl Fn(f64) -> f64) -> Dataset {
        let x = Array2::from_shape_fn((n, 1), |(i, _)| -1.0 + 2.0 * i as f64 / (n - 1) as f64);
        let y = x.column(0).mapv(f);
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn zero_inputs_stay_zero() {
        let x = array![[-1.0], [0.0], [1.0]];
        let pre = Precompute::new(x.view());
        let f = DcFactors::new(&pre, 0.5).unwrap();
        let st = DcAdmmState::zeros(3, 1);
        let (y1, y2) = update_y_pair(&st, x.view(), &pre, &f, Array1::zeros(3).view(), 0.5);
        assert!(y1.iter().chain(&y2).all(|&v| v == 0.0));
    }

    #[test]
    fn antisymmetric_inputs_give_mirrored_values() {
        let x = array![[-1.0], [0.0], [1.0]];
        let pre = Precompute::new(x.view());
        let f = DcFactors::new(&pre, 0.5).unwrap();
        let mut st = DcAdmmState::zeros(3, 1);
        st.copies[0].eta = array![[0.3], [-0.1], [0.2]];
        st.copies[1].eta = -&st.copies[0].eta;
        let y = array![0.5, -1.0, 0.5];
        let (y1, y2) = update_y_pair(&st, x.view(), &pre, &f, y.view(), 0.5);
        assert_eq!(y1, -&y2);
        assert!(y1.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn constant_response_fits_zero() {
        let data = grid(5, |_| 3.0);
        let mut cfg = FitConfig::new(0.1);
        cfg.max_iters = 30;
        let (model, report) = fit_dc(&data, &cfg).unwrap();
        assert_eq!(report.last().unwrap().objective, 0.0);
        assert_eq!(model.evaluate(array![0.3].view()).unwrap(), 3.0);
    }

    #[test]
    fn richer_class_fits_at_least_as_well() {
        let data = grid(15, |x| x * x);
        let mut cfg = FitConfig::new(0.01);
        cfg.rho = Rho::Fixed(0.01);
        cfg.max_iters = 3000;
        let (cm, _) = fit_convex(&data, &cfg).unwrap();
        let (dm, _) = fit_dc(&data, &cfg).unwrap();
        let mse = |p: Array1<f64>| (&p - &data.y()).mapv(|e| e * e).mean().unwrap();
        let c = mse(cm.predict(data.x()).unwrap());
        let d = mse(dm.predict(data.x()).unwrap());
        assert!(d <= c + 1e-6, "dc {d} vs convex {c}");
    }

    #[test]
    fn exchange_symmetry_is_exact() {
        let data = grid(12, |x| x.abs() - 0.5 * x * x * x);
        let neg = Dataset::new(data.x().to_owned(), data.y().mapv(|v| -v)).unwrap();
        let mut cfg = FitConfig::new(0.05);
        cfg.rho = Rho::Fixed(0.05);
        cfg.max_iters = 200;
        let (m, r) = fit_dc(&data, &cfg).unwrap();
        let (mn, rn) = fit_dc(&neg, &cfg).unwrap();
        assert_eq!(m.phi1().slopes(), mn.phi2().slopes());
        assert_eq!(m.phi2().offsets(), mn.phi1().offsets());
        assert_eq!(r.iterations(), rn.iterations());
        for k in 0..9 {
            let x = array![-1.2 + 0.3 * k as f64];
            assert_eq!(m.evaluate(x.view()).unwrap(), -mn.evaluate(x.view()).unwrap());
        }
    }
}
