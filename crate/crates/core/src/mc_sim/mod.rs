//! Monte Carlo: Brownian paths, grid detection of `M_{a,b}` and `R_a`, and
//! estimators checked against the analytic results.

pub mod detect;
pub mod estimate;
pub mod path;
pub mod run;
pub mod triplet;

pub use detect::{
    correspondence_mismatches, detect_m_ab, detect_r_a, detect_window_maxima, trailing_max, Interval, PointSample,
    RegenerativeSample,
};
pub use estimate::{
    estimate_intensity, estimate_pair_correlation, gap_statistics, grid_intensity, pair_correlation_at, tail_ratio,
    BinEstimate, Estimate, GapStatistics, TailRatio,
};
pub use path::{gen_brownian, path_rng, BrownianPath, PathConfig};
pub use run::{simulate, simulate_coupled, summarize, Check, CoupledOutcome, PathOutcome, SimulationSummary};
pub use triplet::{sample_triplet, triplet_chi_square, triplet_density, ChiSquareTest, Triplet, TripletBinning};
