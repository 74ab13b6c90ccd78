//! Dataset normalization, design-matrix precomputation and the `L` root finder
//! shared by every fitter.

mod dataset;
mod l_update;
mod precompute;

pub use dataset::{normalize, Dataset, NormalizationState, TargetKind, SCALE_FLOOR};
pub use l_update::{l_update, l_update_bisection, l_update_with, psi};
pub use precompute::{
    build_omega, compute_d, lambda_times_anchor, omega_matrix, precompute_lambdas,
    precompute_lambdas_direct, OmegaFactor, OmegaVariant, Precompute, SINGULAR_PIVOT_RATIO,
};

/// Scalar-operation count below which data-parallel loops run sequentially.
pub(crate) const PARALLEL_THRESHOLD: usize = 1 << 15;

pub(crate) fn parallel(work: usize) -> bool {
    work >= PARALLEL_THRESHOLD && rayon::current_num_threads() > 1
}
