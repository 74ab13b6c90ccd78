use std::io::{self, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::{FitConfig, Residuals};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub res_convexity: f64,
    pub res_l: f64,
    pub res_ap: f64,
    /// Wall time since the fit started.
    pub millis: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIters,
    EarlyStop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub lambda: f64,
    pub rho: f64,
    pub records: Vec<IterationRecord>,
    pub stop_reason: StopReason,
}

impl FitReport {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "iter,objective,res_convexity,res_L,res_ap,millis")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{:.3}",
                r.iter, r.objective, r.res_convexity, r.res_l, r.res_ap, r.millis
            )?;
        }
        Ok(())
    }
}

/// One ADMM fitter as seen by the shared iteration loop.
pub(crate) trait Iterate {
    /// Runs one full iteration and returns the primal residuals afterwards.
    fn step(&mut self) -> Result<Residuals>;
    /// Regularized objective of the current iterate.
    fn objective(&self) -> f64;
    /// Error monitored for early stopping.
    fn monitor(&self, averaged: bool) -> f64;
    fn n(&self) -> usize;
    fn lambda(&self) -> f64;
    fn rho(&self) -> f64;
}

/// Tracks the best monitored value; signals a stop once a full window passes
/// without improving it by at least the threshold.
#[derive(Debug, Clone)]
pub(crate) struct EarlyStopMonitor {
    min_improvement: f64,
    best: f64,
}

impl EarlyStopMonitor {
    pub(crate) fn new(min_improvement: f64) -> Self {
        Self {
            min_improvement,
            best: f64::INFINITY,
        }
    }

    pub(crate) fn should_stop(&mut self, value: f64) -> bool {
        let stop = self.best.is_finite() && self.best - value < self.min_improvement;
        self.best = self.best.min(value);
        stop
    }
}

pub(crate) fn drive<I: Iterate>(fitter: &mut I, config: &FitConfig) -> Result<FitReport> {
    let start = Instant::now();
    let mut records = Vec::with_capacity(config.max_iters);
    let window = config.early_stop.map(|es| es.window.unwrap_or(fitter.n()).max(1));
    let mut monitor = config.early_stop.map(|es| EarlyStopMonitor::new(es.min_improvement));
    let mut stop_reason = StopReason::MaxIters;
    for iter in 1..=config.max_iters {
        let res = fitter.step()?;
        records.push(IterationRecord {
            iter,
            objective: fitter.objective(),
            res_convexity: res.convexity,
            res_l: res.bound,
            res_ap: res.split,
            millis: start.elapsed().as_secs_f64() * 1e3,
        });
        if let (Some(w), Some(m)) = (window, monitor.as_mut()) {
            if iter % w == 0 && m.should_stop(fitter.monitor(config.averaged_output)) {
                log::debug!("early stop at iteration {iter}");
                stop_reason = StopReason::EarlyStop;
                break;
            }
        }
    }
    Ok(FitReport {
        lambda: fitter.lambda(),
        rho: fitter.rho(),
        records,
        stop_reason,
    })
}
