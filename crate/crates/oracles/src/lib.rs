//! Slow reference implementations for the test suites.
//!
//! Nothing here depends on the fast solvers: the programs are transcribed
//! directly, solved with a generic augmented Lagrangian method, and scored at
//! feasible points.

pub mod alm;
pub mod fd;
pub mod lagrangian;
pub mod problem;
pub mod solvers;

pub use alm::OracleBudget;
pub use fd::{finite_difference_gradient, Coordinate, Partial};
pub use problem::Problem;
pub use solvers::{
    bregman_objective, convex_objective, dc_objective, subgradient_solve_bregman, subgradient_solve_convex,
    subgradient_solve_dc,
};
