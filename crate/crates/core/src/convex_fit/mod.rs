//! Two-block ADMM for penalized convex regression.
//!
//! The fitted values `ŷ` and slopes `a` form the first block; the column
//! bounds `L`, the split `a = p⁺ − p⁻` with its slack `u`, and the convexity
//! slacks `s` form the second. Every block has a closed-form minimizer.

mod config;
mod report;
mod solver;
mod state;

pub use config::{EarlyStop, FitConfig, Monotone, Rho};
pub use report::{FitReport, IterationRecord, StopReason};
pub(crate) use report::{drive, Iterate};
pub use solver::{fit_convex, fit_convex_validated, ConvexSolver, DIVERGENCE_LIMIT};
pub(crate) use solver::check_divergence;
pub use state::{
    beta, column_bound_sum, convexity_residual, objective, slopes_from_values, theta, update_a, update_bound_block,
    update_duals, update_second_block, update_y, v_vector, ConvexAdmmState, Residuals,
};
pub(crate) use state::{update_duals_with, update_slack};
