//! Estimators over batches of detected samples, with path-level standard errors.

use serde::{Deserialize, Serialize};

use super::detect::{reach_steps, PointSample, RegenerativeSample};
use crate::error::{Error, Result};
use crate::grid_calc::{GapLaw, GridFunction, ProcessParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Standard error of a product of ratios `prod_k (sum num_k / sum den_k)^{s_k}`
/// by linearization over paths; every slice holds one entry per path.
fn ratio_stderr(value: f64, factors: &[(&[f64], &[f64], f64)]) -> f64 {
    let n = factors[0].0.len();
    if n < 2 {
        return f64::NAN;
    }
    let mut ss = 0.0;
    for p in 0..n {
        let mut e = 0.0;
        for &(num, den, s) in factors {
            let (sn, sd): (f64, f64) = (num.iter().sum(), den.iter().sum());
            if sn > 0.0 {
                e += s * num[p] / sn;
            }
            e -= s * den[p] / sd;
        }
        ss += e * e;
    }
    value.abs() * (ss * n as f64 / (n - 1) as f64).sqrt()
}

fn require_paths(samples: &[PointSample]) -> Result<()> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need >= 2 paths, got {}",
            samples.len()
        )));
    }
    Ok(())
}

/// Total count over total valid measure.
pub fn estimate_intensity(samples: &[PointSample]) -> Result<Estimate> {
    require_paths(samples)?;
    let counts: Vec<f64> = samples.iter().map(|s| s.len() as f64).collect();
    let measures: Vec<f64> = samples.iter().map(PointSample::valid_measure).collect();
    let mean = counts.iter().sum::<f64>() / measures.iter().sum::<f64>();
    if mean == 0.0 {
        return Ok(Estimate { mean, stderr: 0.0 });
    }
    Ok(Estimate {
        mean,
        stderr: ratio_stderr(mean, &[(&counts, &measures, 1.0)]),
    })
}

/// Exact intensity of the grid process: by Sparre Andersen, a Gaussian walk
/// stays below its start for `n` steps with probability `binom(2n, n) / 4^n`,
/// and the two sides are independent.
pub fn grid_intensity(p: &ProcessParams, dt: f64) -> f64 {
    let q = |n: usize| (1..=n).fold(1.0, |acc, k| acc * (2 * k - 1) as f64 / (2 * k) as f64);
    q(reach_steps(p.a(), dt)) * q(reach_steps(p.b(), dt)) / dt
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinEstimate {
    pub center: f64,
    pub value: f64,
    pub stderr: f64,
    pub pairs: usize,
}

/// Estimates of `h` on `[c - half_width, c + half_width)` for each center:
/// ordered pairs whose first point lies in `[lo, hi - r_max]` of its path,
/// divided by (that measure x bin width x pooled intensity).
pub fn pair_correlation_at(samples: &[PointSample], centers: &[f64], half_width: f64) -> Result<Vec<BinEstimate>> {
    require_paths(samples)?;
    let dt = samples[0].dt;
    if !(half_width > 0.0) || 2.0 * half_width < 2.0 * dt {
        return Err(Error::InvalidParams(format!(
            "bin width {} is below 2 dt",
            2.0 * half_width
        )));
    }
    let r_max = centers.iter().fold(0.0_f64, |m, &c| m.max(c + half_width));
    let mut counts = vec![vec![0.0; samples.len()]; centers.len()];
    let mut anchors = Vec::with_capacity(samples.len());
    for (p, s) in samples.iter().enumerate() {
        let (lo, hi) = s.valid_window;
        let cut = hi - r_max;
        if cut <= lo {
            return Err(Error::InsufficientData(format!(
                "valid window shorter than r_max = {r_max}"
            )));
        }
        anchors.push(((cut - lo) / dt).round() * dt + dt);
        let t = &s.times;
        for i in 0..t.len() {
            if t[i] > cut + 0.5 * dt {
                break;
            }
            for &tj in &t[i + 1..] {
                let r = tj - t[i];
                if r >= r_max {
                    break;
                }
                for (c, row) in centers.iter().zip(counts.iter_mut()) {
                    if r >= c - half_width && r < c + half_width {
                        row[p] += 1.0;
                    }
                }
            }
        }
    }
    let points: Vec<f64> = samples.iter().map(|s| s.len() as f64).collect();
    let measures: Vec<f64> = samples.iter().map(PointSample::valid_measure).collect();
    let lambda = points.iter().sum::<f64>() / measures.iter().sum::<f64>();
    if lambda == 0.0 {
        return Err(Error::InsufficientData("no points detected".into()));
    }
    let width = 2.0 * half_width;
    let total_anchor: f64 = anchors.iter().sum();
    Ok(centers
        .iter()
        .zip(&counts)
        .map(|(&center, row)| {
            let pairs: f64 = row.iter().sum();
            let value = pairs / (total_anchor * width * lambda);
            let stderr = ratio_stderr(value, &[(row, &anchors, 1.0), (&points, &measures, -1.0)]);
            BinEstimate {
                center,
                value,
                stderr,
                pairs: pairs as usize,
            }
        })
        .collect())
}

/// Histogram estimate of `h` on bins `[k w, (k+1) w)` up to `r_max`, stored at
/// the bin centers.
pub fn estimate_pair_correlation(samples: &[PointSample], bin_width: f64, r_max: f64) -> Result<GridFunction> {
    if !(bin_width > 0.0) || !(r_max >= bin_width) {
        return Err(Error::InvalidParams(format!(
            "need 0 < bin_width <= r_max, got {bin_width}, {r_max}"
        )));
    }
    let bins = (r_max / bin_width + 1e-9).floor() as usize;
    let centers: Vec<f64> = (0..bins).map(|k| (k as f64 + 0.5) * bin_width).collect();
    let est = pair_correlation_at(samples, &centers, 0.5 * bin_width)?;
    GridFunction::new(0.5 * bin_width, bin_width, est.iter().map(|e| e.value).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapStatistics {
    pub n: usize,
    pub mean: f64,
    pub mean_stderr: f64,
    pub lag1_corr: f64,
    pub lag1_stderr: f64,
    pub ks_distance: f64,
    /// `1.628 / sqrt(n)`, the asymptotic 1% critical value.
    pub ks_critical: f64,
}

/// Gaps `T_{k+1} - T_k` whose left point lies in `[lo, hi - cutoff]`, so that
/// every gap shorter than `cutoff` is observed whatever its length.
pub fn interior_gaps(sample: &PointSample, cutoff: f64) -> Vec<f64> {
    let cut = sample.valid_window.1 - cutoff + 0.5 * sample.dt;
    sample
        .times
        .windows(2)
        .take_while(|w| w[0] <= cut)
        .map(|w| w[1] - w[0])
        .collect()
}

/// Observation cutoff for gaps: `20 a` (the survival is `~ e^{-rho r / a}`),
/// capped at half the valid window.
pub fn gap_cutoff(p: &ProcessParams, sample: &PointSample) -> f64 {
    let (lo, hi) = sample.valid_window;
    (20.0 * p.a()).min(0.5 * (hi - lo))
}

/// Pooled-gap mean, lag-1 correlation within paths, and KS distance to `law`.
pub fn gap_statistics(samples: &[PointSample], law: &GapLaw) -> Result<GapStatistics> {
    let p = law.params();
    let per_path: Vec<Vec<f64>> = samples.iter().map(|s| interior_gaps(s, gap_cutoff(&p, s))).collect();
    let mut pooled: Vec<f64> = per_path.iter().flatten().copied().collect();
    let n = pooled.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("only {n} gaps")));
    }
    let mean = pooled.iter().sum::<f64>() / n as f64;
    let var = pooled.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1) as f64;

    let pairs: Vec<(f64, f64)> = per_path
        .iter()
        .flat_map(|g| g.windows(2).map(|w| (w[0], w[1])))
        .collect();
    let m = pairs.len();
    let (mx, my) = pairs.iter().fold((0.0, 0.0), |(x, y), &(u, v)| (x + u, y + v));
    let (mx, my) = (mx / m as f64, my / m as f64);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(u, v) in &pairs {
        sxy += (u - mx) * (v - my);
        sxx += (u - mx).powi(2);
        syy += (v - my).powi(2);
    }
    let lag1_corr = if sxx > 0.0 && syy > 0.0 {
        sxy / (sxx * syy).sqrt()
    } else {
        0.0
    };

    pooled.sort_by(f64::total_cmp);
    let mut ks: f64 = 0.0;
    for (k, &g) in pooled.iter().enumerate() {
        let f = law.cdf(g);
        ks = ks
            .max((f - k as f64 / n as f64).abs())
            .max(((k + 1) as f64 / n as f64 - f).abs());
    }
    Ok(GapStatistics {
        n,
        mean,
        mean_stderr: (var / n as f64).sqrt(),
        lag1_corr,
        lag1_stderr: 1.0 / (m as f64).sqrt(),
        ks_distance: ks,
        ks_critical: 1.628 / (n as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRatio {
    pub r1: f64,
    pub r2: f64,
    pub count_r1: usize,
    pub count_r2: usize,
    /// `count_r2 / count_r1`.
    pub fraction: f64,
    /// `sqrt(r1 / r2)`, from `nu_a(r, inf) = sqrt(2 / (pi r))` on `(0, a]`.
    pub target: f64,
    /// Binomial standard error under the target.
    pub stderr: f64,
}

/// Among `R_a` gaps of length `>= r1` starting after `a`, the fraction also `>= r2`.
pub fn tail_ratio(samples: &[RegenerativeSample], a: f64, r1: f64, r2: f64) -> Result<TailRatio> {
    if !(0.0 < r1 && r1 < r2 && r2 <= a) {
        return Err(Error::InvalidParams(format!(
            "need 0 < r1 < r2 <= a, got {r1}, {r2}, a={a}"
        )));
    }
    let (mut c1, mut c2) = (0usize, 0usize);
    for s in samples {
        for g in s.gaps_from(a) {
            let len = g.end - g.start + 0.5 * s.dt;
            c1 += usize::from(len >= r1);
            c2 += usize::from(len >= r2);
        }
    }
    if c1 == 0 {
        return Err(Error::InsufficientData(format!("no gaps of length >= {r1}")));
    }
    let target = (r1 / r2).sqrt();
    Ok(TailRatio {
        r1,
        r2,
        count_r1: c1,
        count_r2: c2,
        fraction: c2 as f64 / c1 as f64,
        target,
        stderr: (target * (1.0 - target) / c1 as f64).sqrt(),
    })
}
