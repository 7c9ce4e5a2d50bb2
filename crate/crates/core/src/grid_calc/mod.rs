//! Deterministic grid computations: pair kernel, Levy tail `G_a`, gap law.

pub mod grid;
pub mod kernel;
pub mod laplace;
pub mod levy;
pub mod renewal;

pub use grid::{conv_grid, conv_grid_with, AbelWeights, GridFunction, GridMeta};
pub use kernel::{
    check_h_max_regime, corollary_laplace, correlation_fn, eval_h, eval_h_infinity, HMaxRegime, PairKernel,
    ProcessParams,
};
pub use laplace::{laplace_numeric, TailModel};
pub use levy::{
    abel_residual, levy_measure_tail_closed, levy_tail, levy_tail_anchor, levy_tail_recursion, levy_tail_series,
    levy_tail_volterra_abel, max_discrepancy, LevyMethod, LevyTail,
};
pub use renewal::{
    first_point_density, gap_density_series, gap_laplace_via_levy, joint_t0_t1_density, levy_gap_denominator,
    mean_gap_from_laplace, GapLaw, TailTransform,
};
