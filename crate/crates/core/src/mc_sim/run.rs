//! Per-path simulation jobs and the JSON run report.

use serde::{Deserialize, Serialize};

use super::detect::{correspondence_mismatches, detect_m_ab, detect_r_a, PointSample, RegenerativeSample};
use super::estimate::{
    estimate_intensity, gap_cutoff, gap_statistics, grid_intensity, interior_gaps, pair_correlation_at, tail_ratio,
    BinEstimate, Estimate, GapStatistics, TailRatio,
};
use super::path::{gen_brownian, PathConfig};
use crate::error::Result;
use crate::grid_calc::{GapLaw, PairKernel, ProcessParams};
use crate::par::Execution;

/// Relative systematic allowance for grid-detection bias.
pub const SYSTEMATIC_ALLOWANCE: f64 = 0.02;
/// Statistical band width in standard errors.
pub const Z_BAND: f64 = 3.0;

/// Detections on one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathOutcome {
    pub points: PointSample,
    pub regen: RegenerativeSample,
}

pub fn simulate_path(cfg: &PathConfig, p: &ProcessParams, index: u64) -> Result<PathOutcome> {
    let path = gen_brownian(cfg, index);
    Ok(PathOutcome {
        points: detect_m_ab(&path, p)?,
        regen: detect_r_a(&path, p.a())?,
    })
}

/// All paths of `cfg`, in index order whatever the execution strategy.
pub fn simulate(cfg: &PathConfig, p: &ProcessParams, exec: Execution) -> Result<Vec<PathOutcome>> {
    cfg.validate_for(p)?;
    exec.map_indexed(cfg.n_paths, |k| simulate_path(cfg, p, k as u64))
        .into_iter()
        .collect()
}

/// A path simulated at `dt / 2` and detected both at that step and after
/// coarsening to `dt`; the two resolutions share their randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledOutcome {
    pub fine: PointSample,
    pub coarse: PathOutcome,
}

pub fn simulate_coupled(cfg: &PathConfig, p: &ProcessParams, exec: Execution) -> Result<Vec<CoupledOutcome>> {
    cfg.validate_for(p)?;
    let fine_cfg = cfg.refined(2);
    exec.map_indexed(cfg.n_paths, |k| {
        let fine = gen_brownian(&fine_cfg, k as u64);
        let coarse = fine.coarsen(2)?;
        Ok(CoupledOutcome {
            fine: detect_m_ab(&fine, p)?,
            coarse: PathOutcome {
                points: detect_m_ab(&coarse, p)?,
                regen: detect_r_a(&coarse, p.a())?,
            },
        })
    })
    .into_iter()
    .collect()
}

/// One estimator against its target: pass iff
/// `|value - target| <= Z_BAND * stderr + allowance * |target|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
    pub target: f64,
    pub allowance: f64,
    pub pass: bool,
}

impl Check {
    pub fn banded(name: impl Into<String>, value: f64, stderr: f64, target: f64, allowance: f64) -> Self {
        let pass = (value - target).abs() <= Z_BAND * stderr + allowance * target.abs();
        Self {
            name: name.into(),
            value,
            stderr,
            target,
            allowance,
            pass,
        }
    }

    pub fn exact(name: impl Into<String>, value: f64, target: f64) -> Self {
        Self {
            name: name.into(),
            value,
            stderr: 0.0,
            target,
            allowance: 0.0,
            pass: value == target,
        }
    }

    pub fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            stderr: 0.0,
            target: limit,
            allowance: 0.0,
            pass: value < limit,
        }
    }
}

/// Bin centers for the pair-correlation check: three inside `(b, 2b)` and one on the plateau.
pub fn pair_check_centers(p: &ProcessParams) -> Vec<f64> {
    let b = p.b();
    vec![1.25 * b, 1.5 * b, 1.75 * b, p.a() + 2.0 * b]
}

/// Half width of the pair-correlation check bins.
pub fn pair_check_half_width(p: &ProcessParams) -> f64 {
    0.05 * p.b()
}

/// Ordered pairs closer than `b`, which the process forbids.
pub fn close_pairs(samples: &[PointSample], b: f64) -> usize {
    samples
        .iter()
        .map(|s| s.times.windows(2).filter(|w| w[1] - w[0] < b).count())
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub a: f64,
    pub b: f64,
    pub config: PathConfig,
    pub intensity: Estimate,
    pub grid_intensity: f64,
    pub pair_correlation: Vec<BinEstimate>,
    pub close_pairs: usize,
    pub gaps: GapStatistics,
    pub tail_ratio: TailRatio,
    pub correspondence_mismatches: usize,
    pub ties: usize,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Estimators and checks over simulated paths; `kernel` supplies the `h`
/// targets for the pair correlation.
pub fn summarize(
    cfg: &PathConfig,
    kernel: &dyn PairKernel,
    law: &GapLaw,
    outcomes: &[PathOutcome],
) -> Result<SimulationSummary> {
    let p = kernel.params();
    let samples: Vec<PointSample> = outcomes.iter().map(|o| o.points.clone()).collect();
    let regen: Vec<RegenerativeSample> = outcomes.iter().map(|o| o.regen.clone()).collect();
    let intensity = estimate_intensity(&samples)?;
    let pair_correlation = pair_correlation_at(&samples, &pair_check_centers(&p), pair_check_half_width(&p))?;
    let gaps = gap_statistics(&samples, law)?;
    let ratio = tail_ratio(&regen, p.a(), 0.25 * p.a(), p.a())?;
    let mismatches: usize = outcomes
        .iter()
        .map(|o| {
            let starts = o.regen.long_gap_starts(p.b(), p.a());
            correspondence_mismatches(&o.points.times, &starts, p.a(), o.points.valid_window.1, cfg.dt)
        })
        .sum();
    let close = close_pairs(&samples, p.b());
    let ties = samples.iter().map(|s| s.ties).sum();

    let mut checks = vec![Check::banded(
        "intensity",
        intensity.mean,
        intensity.stderr,
        p.intensity(),
        SYSTEMATIC_ALLOWANCE,
    )];
    for e in &pair_correlation {
        checks.push(Check::banded(
            format!("pair_correlation@{}", e.center),
            e.value,
            e.stderr,
            kernel.h(e.center),
            SYSTEMATIC_ALLOWANCE,
        ));
    }
    checks.push(Check::exact("pairs_closer_than_b", close as f64, 0.0));
    checks.push(Check::banded(
        "mean_gap",
        gaps.mean,
        gaps.mean_stderr,
        p.mean_gap(),
        SYSTEMATIC_ALLOWANCE,
    ));
    checks.push(Check::banded(
        "gap_lag1_corr",
        gaps.lag1_corr,
        gaps.lag1_stderr,
        0.0,
        0.0,
    ));
    checks.push(Check::below("gap_ks_distance", gaps.ks_distance, gaps.ks_critical));
    checks.push(Check::banded(
        "tail_ratio",
        ratio.fraction,
        ratio.stderr,
        ratio.target,
        0.0,
    ));
    checks.push(Check::exact("correspondence_mismatches", mismatches as f64, 0.0));
    let pass = checks.iter().all(|c| c.pass);
    Ok(SimulationSummary {
        a: p.a(),
        b: p.b(),
        config: *cfg,
        intensity,
        grid_intensity: grid_intensity(&p, cfg.dt),
        pair_correlation,
        close_pairs: close,
        gaps,
        tail_ratio: ratio,
        correspondence_mismatches: mismatches,
        ties,
        checks,
        pass,
    })
}

/// Pooled interior gaps, for raw dumps.
pub fn pooled_gaps(p: &ProcessParams, outcomes: &[PathOutcome]) -> Vec<f64> {
    outcomes
        .iter()
        .flat_map(|o| interior_gaps(&o.points, gap_cutoff(p, &o.points)))
        .collect()
}
