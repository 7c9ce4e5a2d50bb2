//! Local maxima of Brownian motion with left reach `a` and right reach `b`:
//! special functions, grid computations of the Levy tail and gap law, and a
//! Monte Carlo simulator with statistical checks.

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid_calc;
pub mod mc_sim;
pub mod par;
pub mod special_fn;
pub mod verify;

pub use error::{Error, Result};
pub use grid_calc::{GridFunction, PairKernel, ProcessParams};
pub use par::Execution;
