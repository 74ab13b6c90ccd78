use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::model::MaxAffineModel;
use crate::numerics::{normalize, Dataset, NormalizationState, OmegaFactor, OmegaVariant, Precompute, TargetKind};

use super::report::{drive, Iterate};
use super::state::{
    convexity_residual, objective, slopes_from_values, theta, update_bound_block, update_duals_with, update_slack,
    values_rhs_solve, ConvexAdmmState, Residuals,
};
use super::{FitConfig, FitReport, Monotone};

/// Magnitude beyond which the iteration is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Convex regression ADMM on normalized data.
#[derive(Debug, Clone)]
pub struct ConvexSolver {
    x: Array2<f64>,
    y: Array1<f64>,
    norm: NormalizationState,
    pre: Precompute,
    factor: OmegaFactor,
    lambda: f64,
    rho: f64,
    monotone: Monotone,
    state: ConvexAdmmState,
    validation: Option<(Array2<f64>, Array1<f64>)>,
}

impl ConvexSolver {
    /// `data` must already be normalized; `norm` is kept only to build models.
    pub fn new(data: &Dataset, norm: NormalizationState, config: &FitConfig) -> Result<Self> {
        config.validate()?;
        let (n, d) = (data.n(), data.d());
        let rho = config.rho.resolve(n, d, config.lambda)?;
        let pre = Precompute::new(data.x());
        let factor = pre.factor(OmegaVariant::Convex { rho })?;
        Ok(Self {
            x: data.x().to_owned(),
            y: data.y().to_owned(),
            norm,
            pre,
            factor,
            lambda: config.lambda,
            rho,
            monotone: config.monotone,
            state: ConvexAdmmState::zeros(n, d),
            validation: None,
        })
    }

    /// Monitors mean squared error on these (normalized) points for early stopping.
    pub fn set_validation(&mut self, x: Array2<f64>, y: Array1<f64>) {
        self.validation = Some((x, y));
    }

    pub fn state(&self) -> &ConvexAdmmState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut ConvexAdmmState {
        &mut self.state
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn precompute(&self) -> &Precompute {
        &self.pre
    }

    pub fn factor(&self) -> &OmegaFactor {
        &self.factor
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// One iteration: `ŷ`, `a`, then `L`, `(u, p⁺, p⁻)`, `s`, then the duals.
    pub fn step(&mut self) -> Result<Residuals> {
        let st = &mut self.state;
        let th = theta(st, self.x.view());
        st.y_hat = values_rhs_solve(&th, st, self.x.view(), &self.pre, &self.factor, self.y.view(), self.rho);
        st.a = slopes_from_values(th.view(), st.y_hat.view(), self.x.view(), &self.pre);
        update_bound_block(st, self.lambda, self.rho, self.monotone);
        let r = convexity_residual(st.y_hat.view(), st.a.view(), self.x.view());
        update_slack(st, r.view());
        update_duals_with(st, r.view());
        st.accumulate();
        check_divergence(st.max_abs(), st.t, self.rho)?;
        Ok(st.residuals_with(r.view()))
    }

    pub fn objective(&self) -> f64 {
        objective(self.y.view(), self.state.y_hat.view(), self.state.a.view(), self.lambda)
    }

    pub fn averaged_objective(&self) -> f64 {
        let (y_hat, a) = self.state.averaged();
        objective(self.y.view(), y_hat.view(), a.view(), self.lambda)
    }

    pub fn model(&self, averaged: bool) -> MaxAffineModel {
        let (y_hat, a) = if averaged {
            self.state.averaged()
        } else {
            (self.state.y_hat.clone(), self.state.a.clone())
        };
        MaxAffineModel::new(self.x.clone(), a, y_hat, self.norm.clone())
            .expect("iterates are finite and shaped by construction")
    }
}

pub(crate) fn check_divergence(max_abs: f64, iteration: usize, rho: f64) -> Result<()> {
    if max_abs.is_nan() || max_abs > DIVERGENCE_LIMIT {
        return Err(Error::Diverged { iteration, rho });
    }
    Ok(())
}

/// Mean squared error of a max-affine model on normalized points.
pub(crate) fn normalized_mse(model: &MaxAffineModel, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
    let sq: f64 = x
        .rows()
        .into_iter()
        .zip(y)
        .map(|(r, &t)| {
            let e = model.evaluate_normalized(r).0 - t;
            e * e
        })
        .sum();
    sq / y.len() as f64
}

impl Iterate for ConvexSolver {
    fn step(&mut self) -> Result<Residuals> {
        ConvexSolver::step(self)
    }

    fn objective(&self) -> f64 {
        ConvexSolver::objective(self)
    }

    fn monitor(&self, averaged: bool) -> f64 {
        match &self.validation {
            Some((x, y)) => normalized_mse(&self.model(averaged), x.view(), y.view()),
            None if averaged => self.averaged_objective(),
            None => self.objective(),
        }
    }

    fn n(&self) -> usize {
        self.state.n()
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn rho(&self) -> f64 {
        self.rho
    }
}

/// Normalizes `data`, runs the ADMM loop and returns the model in raw units.
pub fn fit_convex(data: &Dataset, config: &FitConfig) -> Result<(MaxAffineModel, FitReport)> {
    fit_convex_validated(data, None, config)
}

/// [`fit_convex`] with early stopping monitored on a held-out set (raw units).
pub fn fit_convex_validated(
    data: &Dataset,
    validation: Option<&Dataset>,
    config: &FitConfig,
) -> Result<(MaxAffineModel, FitReport)> {
    let (train, norm) = normalize(data, TargetKind::Regression)?;
    let mut solver = ConvexSolver::new(&train, norm.clone(), config)?;
    if let Some(v) = validation {
        solver.set_validation(norm.apply_x_rows(v.x())?, v.y().mapv(|t| norm.apply_y(t)));
    }
    let report = drive(&mut solver, config)?;
    Ok((solver.model(config.averaged_output), report))
}
