//! The acceptance suite as a library: each criterion computes its metrics,
//! compares them with pinned tolerances, and reports pass or fail.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_calc::{
    abel_residual, corollary_laplace, eval_h, laplace_numeric, levy_tail, levy_tail_anchor, max_discrepancy,
    mean_gap_from_laplace, GapLaw, LevyMethod, LevyTail, PairKernel, ProcessParams, TailModel,
};
use crate::mc_sim::estimate::{estimate_intensity, gap_statistics, grid_intensity, pair_correlation_at, tail_ratio};
use crate::mc_sim::run::{
    close_pairs, pair_check_centers, pair_check_half_width, simulate_coupled, CoupledOutcome, SYSTEMATIC_ALLOWANCE,
    Z_BAND,
};
use crate::mc_sim::{
    correspondence_mismatches, path_rng, sample_triplet, triplet_chi_square, PathConfig, PointSample, Triplet,
    TripletBinning,
};
use crate::par::Execution;
use crate::special_fn::{find_rho, laplace_g_closed, tail_constants};

/// Grid step for the `G_1` and gap-law computations.
pub const GRID_DX: f64 = 1.0 / 400.0;
/// Window on which `G_1` is computed and compared.
pub const G_WINDOW: f64 = 5.0;
/// Window for the gap density before exponential completion.
pub const GAP_WINDOW: f64 = 20.0;

pub const ANCHOR_TOL: f64 = 1e-3;
pub const CROSS_METHOD_TOL: f64 = 2e-3;
/// Residual bound is `RESIDUAL_TOL * sqrt(2 pi)`.
pub const RESIDUAL_TOL: f64 = 1e-3;
pub const LAPLACE_REL_TOL: f64 = 5e-3;
pub const LAPLACE_THETAS: [f64; 4] = [0.5, 1.0, 2.0, 5.0];
pub const RHO_TARGET: f64 = 0.85403;
pub const RHO_TOL: f64 = 1e-4;
pub const RHO_BISECTION_TOL: f64 = 1e-10;
pub const SLOPE_WINDOW: (f64, f64) = (3.0, 5.0);
pub const SLOPE_TOL: f64 = 0.09;
pub const MEAN_REL_TOL: f64 = 1e-2;
/// Step of the one-sided difference for the derivative of the gap transform at 0.
pub const DERIVATIVE_STEP: f64 = 1e-5;
pub const CHI_SQUARE_MIN_P: f64 = 0.01;
pub const TRIPLET_BINS: usize = 10;
/// Stream reserved for triplet draws, disjoint from path indices.
pub const TRIPLET_STREAM: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Deterministic analytics only.
    Fast,
    /// Adds the Monte Carlo criteria.
    Full,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Profile::Fast),
            "full" => Ok(Profile::Full),
            other => Err(Error::InvalidParams(format!(
                "unknown profile {other:?}, expected fast or full"
            ))),
        }
    }
}

/// Monte Carlo scale of the full profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McScale {
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub triplets: usize,
}

impl Default for McScale {
    fn default() -> Self {
        Self {
            dt: 1.0 / 512.0,
            horizon: 200.0,
            n_paths: 200,
            triplets: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifySettings {
    pub profile: Profile,
    pub seed: u64,
    pub mc: McScale,
    #[serde(skip)]
    pub exec: Execution,
}

impl VerifySettings {
    pub fn new(profile: Profile, seed: u64) -> Self {
        Self {
            profile,
            seed,
            mc: McScale::default(),
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub pass: bool,
    pub metrics: BTreeMap<String, f64>,
}

impl CriterionResult {
    fn new(id: u8, name: &str) -> Self {
        Self {
            id,
            name: name.into(),
            pass: true,
            metrics: BTreeMap::new(),
        }
    }

    fn metric(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.metrics.insert(key.into(), value);
        self
    }

    /// Records `value` and folds `ok` into the verdict.
    fn require(&mut self, key: impl Into<String>, value: f64, ok: bool) -> &mut Self {
        self.pass &= ok;
        self.metric(key, value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub profile: Profile,
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn first_failure(&self) -> Option<&CriterionResult> {
        self.criteria.iter().find(|c| !c.pass)
    }

    pub fn criterion(&self, id: u8) -> Option<&CriterionResult> {
        self.criteria.iter().find(|c| c.id == id)
    }
}

/// Builds the pair kernel used for a parameter pair.
pub type KernelFactory<'a> = &'a dyn Fn(ProcessParams) -> Box<dyn PairKernel>;

/// Negative-control kernel: the true `h` below `a + b`, `factor` times the
/// plateau beyond.
#[derive(Debug, Clone, Copy)]
pub struct WrongPlateau {
    pub params: ProcessParams,
    pub factor: f64,
}

impl PairKernel for WrongPlateau {
    fn params(&self) -> ProcessParams {
        self.params
    }

    fn h(&self, r: f64) -> f64 {
        if r >= self.params.a() + self.params.b() {
            self.factor * self.params.intensity()
        } else {
            eval_h(&self.params, r)
        }
    }
}

/// Plateau factor of the negative control.
pub const WRONG_PLATEAU_FACTOR: f64 = 1.5;

fn p11() -> ProcessParams {
    ProcessParams::new(1.0, 1.0).expect("valid")
}

/// `G_1` by every method on `[0, G_WINDOW]`.
pub fn g1_tails(kernel: &dyn PairKernel) -> Result<Vec<LevyTail>> {
    LevyMethod::ALL
        .iter()
        .map(|&m| levy_tail(m, kernel, GRID_DX, G_WINDOW))
        .collect()
}

/// Criterion 1: closed forms on `[0.05, 1]` and `[1, 2]`.
pub fn closed_form_anchor(tails: &[LevyTail]) -> CriterionResult {
    let mut c = CriterionResult::new(1, "closed-form anchor");
    for t in tails {
        let g = t.grid();
        let err = (1..g.len())
            .map(|k| g.node(k))
            .filter(|&r| (0.05 - 1e-12..=2.0 + 1e-12).contains(&r))
            .filter_map(|r| levy_tail_anchor(t.a(), r).map(|exact| (t.eval(r) - exact).abs()))
            .fold(0.0, f64::max);
        c.require(format!("max_abs_err_{}", t.method().name()), err, err <= ANCHOR_TOL);
    }
    c
}

/// Criterion 2: pairwise agreement on `[0, G_WINDOW]` and residual of the defining equation.
pub fn cross_method(tails: &[LevyTail]) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(2, "cross-method agreement");
    for i in 0..tails.len() {
        for j in i + 1..tails.len() {
            let d = max_discrepancy(&tails[i], &tails[j], 0.0, G_WINDOW)?;
            let key = format!("discrepancy_{}_{}", tails[i].method().name(), tails[j].method().name());
            c.require(key, d, d <= CROSS_METHOD_TOL);
        }
    }
    let bound = RESIDUAL_TOL * (2.0 * PI).sqrt();
    for t in tails {
        let res = abel_residual(t).iter().map(|&(_, v)| v.abs()).fold(0.0, f64::max);
        c.require(format!("residual_{}", t.method().name()), res, res <= bound);
    }
    Ok(c)
}

/// Criterion 3: numeric Laplace transform against the Kummer closed form.
pub fn kummer_transform(tails: &[LevyTail]) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(3, "Kummer transform");
    let rate = tail_constants().rate_for_a(1.0);
    for t in tails {
        let model = TailModel::fit_exponential(t.grid(), rate);
        if let TailModel::Exponential { amplitude, .. } = model {
            c.metric(format!("tail_amplitude_{}", t.method().name()), amplitude);
        }
        for &theta in &LAPLACE_THETAS {
            let numeric = laplace_numeric(t.grid(), theta, model)?;
            let closed = laplace_g_closed(t.a(), theta)?;
            let rel = (numeric / closed - 1.0).abs();
            c.require(
                format!("rel_err_{}_theta_{theta}", t.method().name()),
                rel,
                rel <= LAPLACE_REL_TOL,
            );
        }
    }
    Ok(c)
}

/// Criterion 4: root of the Kummer denominator and the log-slope of `G_1`.
pub fn root_and_slope(tails: &[LevyTail]) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(4, "root and slope");
    let rho = find_rho(RHO_BISECTION_TOL)?;
    c.require("rho", rho, (rho - RHO_TARGET).abs() <= RHO_TOL);
    for t in tails {
        let g = t.grid();
        let pts: Vec<(f64, f64)> = (1..g.len())
            .map(|k| (g.node(k), g.value_at_node(k)))
            .filter(|&(r, _)| r >= SLOPE_WINDOW.0 - 1e-12 && r <= SLOPE_WINDOW.1 + 1e-12)
            .map(|(r, v)| (r, v.ln()))
            .collect();
        let slope = least_squares_slope(&pts);
        c.require(
            format!("slope_{}", t.method().name()),
            slope,
            (slope + rho).abs() <= SLOPE_TOL,
        );
    }
    Ok(c)
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(x, y), &(u, v)| (x + u / n, y + v / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), &(u, v)| {
        (a + (u - mx) * (v - my), b + (u - mx).powi(2))
    });
    sxy / sxx
}

/// Criterion 5: renewal mean from the gap density and from the transform.
pub fn renewal_mean(kernels: KernelFactory<'_>) -> Result<(CriterionResult, GapLaw)> {
    let mut c = CriterionResult::new(5, "renewal mean");
    let law = GapLaw::compute(&*kernels(p11()), GRID_DX, GAP_WINDOW)?;
    let mean = law.mean();
    c.require("density_mean_1_1", mean, (mean / PI - 1.0).abs() <= MEAN_REL_TOL);
    for &(a, b) in &[(1.0, 1.0), (4.0, 1.0)] {
        let p = ProcessParams::new(a, b)?;
        let d = mean_gap_from_laplace(&p, DERIVATIVE_STEP)?;
        let target = PI * (a * b).sqrt();
        c.require(
            format!("transform_mean_{a}_{b}"),
            d,
            (d / target - 1.0).abs() <= MEAN_REL_TOL,
        );
    }
    Ok((c, law))
}

/// Criterion 6: intensity at `dt` and its trend when `dt` halves.
pub fn mc_intensity(p: &ProcessParams, data: &[CoupledOutcome], dt: f64) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(6, "Monte Carlo intensity");
    let coarse: Vec<PointSample> = data.iter().map(|o| o.coarse.points.clone()).collect();
    let fine: Vec<PointSample> = data.iter().map(|o| o.fine.clone()).collect();
    let (ec, ef) = (estimate_intensity(&coarse)?, estimate_intensity(&fine)?);
    let target = p.intensity();
    let band = Z_BAND * ec.stderr + SYSTEMATIC_ALLOWANCE * target;
    c.require("estimate", ec.mean, (ec.mean - target).abs() <= band);
    c.metric("stderr", ec.stderr).metric("target", target);
    c.metric("grid_oracle", grid_intensity(p, dt));
    let diffs: Vec<f64> = coarse
        .iter()
        .zip(&fine)
        .map(|(x, y)| y.len() as f64 / y.valid_measure() - x.len() as f64 / x.valid_measure())
        .collect();
    let n = diffs.len() as f64;
    let md = diffs.iter().sum::<f64>() / n;
    let se_diff = (diffs.iter().map(|d| (d - md).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    let (bias_c, bias_f) = ((ec.mean - target).abs(), (ef.mean - target).abs());
    c.metric("estimate_half_dt", ef.mean)
        .metric("bias_dt", bias_c)
        .metric("stderr_paired_diff", se_diff);
    c.require("bias_half_dt", bias_f, bias_f <= bias_c + Z_BAND * se_diff);
    let (oc, of) = (
        (grid_intensity(p, dt) - target).abs(),
        (grid_intensity(p, 0.5 * dt) - target).abs(),
    );
    c.require("grid_oracle_bias_half_dt", of, of < oc);
    Ok(c)
}

/// Criterion 7: binned pair correlation against `kernel.h` and the forbidden zone.
pub fn mc_pair_correlation(kernel: &dyn PairKernel, samples: &[PointSample]) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(7, "Monte Carlo pair correlation");
    let p = kernel.params();
    for e in pair_correlation_at(samples, &pair_check_centers(&p), pair_check_half_width(&p))? {
        let target = kernel.h(e.center);
        let ok = (e.value - target).abs() <= Z_BAND * e.stderr + SYSTEMATIC_ALLOWANCE * target;
        c.require(format!("h_at_{}", e.center), e.value, ok);
        c.metric(format!("stderr_at_{}", e.center), e.stderr)
            .metric(format!("target_at_{}", e.center), target);
    }
    let close = close_pairs(samples, p.b()) as f64;
    c.require("pairs_closer_than_b", close, close == 0.0);
    Ok(c)
}

/// Criterion 8: KS distance of pooled gaps and lag-1 correlation.
pub fn mc_gap_law(law: &GapLaw, samples: &[PointSample]) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(8, "gap law");
    let s = gap_statistics(samples, law)?;
    c.require("ks_distance", s.ks_distance, s.ks_distance < s.ks_critical);
    c.require("lag1_corr", s.lag1_corr, s.lag1_corr.abs() <= Z_BAND * s.lag1_stderr);
    c.metric("ks_critical", s.ks_critical)
        .metric("lag1_stderr", s.lag1_stderr)
        .metric("gaps", s.n as f64);
    Ok(c)
}

/// Criterion 9: triplet sampler vs density, the double-Laplace functional,
/// and its `alpha = 0` reduction.
pub fn triplet_checks(seed: u64, n: usize) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(9, "argmax and drops");
    let mut rng = path_rng(seed, TRIPLET_STREAM);
    let draws: Vec<Triplet> = (0..n)
        .map(|_| sample_triplet(0.0, 1.0, &mut rng))
        .collect::<Result<_>>()?;
    let test = triplet_chi_square(&draws, &TripletBinning::new(TRIPLET_BINS, 1.0)?)?;
    c.require("chi_square_p_value", test.p_value, test.p_value > CHI_SQUARE_MIN_P);
    c.metric("chi_square_statistic", test.statistic);
    let vals: Vec<f64> = draws.iter().map(|t| (-(t.g * t.g + t.d * t.d) / 2.0).exp()).collect();
    let m = vals.iter().sum::<f64>() / n as f64;
    let se = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt();
    let target = corollary_laplace(1.0, 1.0)?;
    c.require("functional_1_1", m, (m - target).abs() <= Z_BAND * se);
    c.metric("functional_stderr", se).metric("functional_target", target);
    let reduction = [0.0, 0.5, 1.0, 3.0, 10.0]
        .iter()
        .map(|&beta| Ok((corollary_laplace(0.0, beta)? - 1.0 / (1.0 + beta).sqrt()).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    c.require("alpha_zero_reduction_err", reduction, reduction <= 4.0 * f64::EPSILON);
    Ok(c)
}

/// Criterion 10: `M_{a,b}` versus long gaps of `R_a`, and the tail ratio of `R_a` gaps.
pub fn mc_regenerative(p: &ProcessParams, data: &[CoupledOutcome], dt: f64) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(10, "regenerative structure");
    let mismatches: usize = data
        .iter()
        .map(|o| {
            let starts = o.coarse.regen.long_gap_starts(p.b(), p.a());
            correspondence_mismatches(
                &o.coarse.points.times,
                &starts,
                p.a(),
                o.coarse.points.valid_window.1,
                dt,
            )
        })
        .sum();
    c.require("correspondence_mismatches", mismatches as f64, mismatches == 0);
    let regen: Vec<_> = data.iter().map(|o| o.coarse.regen.clone()).collect();
    let r = tail_ratio(&regen, p.a(), 0.25 * p.a(), p.a())?;
    c.require(
        "tail_fraction",
        r.fraction,
        (r.fraction - r.target).abs() <= Z_BAND * r.stderr,
    );
    c.metric("tail_target", r.target)
        .metric("tail_stderr", r.stderr)
        .metric("gaps_r1", r.count_r1 as f64);
    Ok(c)
}

fn coarse_samples(data: &[CoupledOutcome]) -> Vec<PointSample> {
    data.iter().map(|o| o.coarse.points.clone()).collect()
}

/// Criteria 1 to 10 with the kernels from `kernels`; 6 to 10 need `data`.
fn run_criteria(
    settings: &VerifySettings,
    kernels: KernelFactory<'_>,
    data: Option<&[CoupledOutcome]>,
) -> Result<Vec<CriterionResult>> {
    let p = p11();
    let kernel = kernels(p);
    let tails = g1_tails(&*kernel)?;
    let mut criteria = vec![
        closed_form_anchor(&tails),
        cross_method(&tails)?,
        kummer_transform(&tails)?,
        root_and_slope(&tails)?,
    ];
    let (c5, law) = renewal_mean(kernels)?;
    criteria.push(c5);
    if let Some(data) = data {
        let samples = coarse_samples(data);
        criteria.push(mc_intensity(&p, data, settings.mc.dt)?);
        criteria.push(mc_pair_correlation(&*kernel, &samples)?);
        criteria.push(mc_gap_law(&law, &samples)?);
        criteria.push(triplet_checks(settings.seed, settings.mc.triplets)?);
        criteria.push(mc_regenerative(&p, data, settings.mc.dt)?);
    }
    Ok(criteria)
}

fn report(settings: &VerifySettings, criteria: Vec<CriterionResult>) -> VerificationReport {
    let pass = criteria.iter().all(|c| c.pass);
    VerificationReport {
        profile: settings.profile,
        seed: settings.seed,
        criteria,
        pass,
    }
}

/// Paths at `dt / 2`, detected there and after coarsening to `dt`.
pub fn mc_data(settings: &VerifySettings) -> Result<Vec<CoupledOutcome>> {
    let m = settings.mc;
    let cfg = PathConfig::new(m.dt, m.horizon, settings.seed, m.n_paths)?;
    simulate_coupled(&cfg, &p11(), settings.exec)
}

fn profile_data(settings: &VerifySettings) -> Result<Option<Vec<CoupledOutcome>>> {
    match settings.profile {
        Profile::Full => mc_data(settings).map(Some),
        Profile::Fast => Ok(None),
    }
}

/// The suite with the kernels from `kernels`, without the negative control.
pub fn verify_with(settings: &VerifySettings, kernels: KernelFactory<'_>) -> Result<VerificationReport> {
    let data = profile_data(settings)?;
    Ok(report(settings, run_criteria(settings, kernels, data.as_deref())?))
}

/// Criterion 11: with [`WrongPlateau`], criterion 2 fails and, when Monte
/// Carlo samples are given, criterion 7 fails as well.
pub fn negative_control(samples: Option<&[PointSample]>) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(11, "negative control");
    let wrong = WrongPlateau {
        params: p11(),
        factor: WRONG_PLATEAU_FACTOR,
    };
    let c2 = cross_method(&g1_tails(&wrong)?)?;
    c.require("criterion_2_rejects", f64::from(u8::from(!c2.pass)), !c2.pass);
    if let Some(s) = samples {
        let c7 = mc_pair_correlation(&wrong, s)?;
        c.require("criterion_7_rejects", f64::from(u8::from(!c7.pass)), !c7.pass);
    }
    Ok(c)
}

/// The suite with the true kernel, followed by the negative control.
pub fn verify(settings: &VerifySettings) -> Result<VerificationReport> {
    let kernels = |p: ProcessParams| Box::new(p) as Box<dyn PairKernel>;
    let data = profile_data(settings)?;
    let mut criteria = run_criteria(settings, &kernels, data.as_deref())?;
    let samples = data.as_deref().map(coarse_samples);
    criteria.push(negative_control(samples.as_deref())?);
    Ok(report(settings, criteria))
}
