//! One function per subcommand: validate, compute in memory, stage outputs.

use std::collections::BTreeMap;
use std::fmt::Write;

use maxproc::grid_calc::grid::fmt_num;
use maxproc::grid_calc::{
    abel_residual, eval_h, laplace_numeric, levy_tail, max_discrepancy, GapLaw, LevyTail, PairKernel, ProcessParams,
    TailModel,
};
use maxproc::mc_sim::run::{pooled_gaps, simulate, summarize};
use maxproc::mc_sim::{estimate_pair_correlation, PathConfig, PointSample};
use maxproc::special_fn::{find_rho, laplace_g_closed, tail_constants, TailConstants};
use maxproc::verify::{self, VerifySettings, CROSS_METHOD_TOL, LAPLACE_REL_TOL, RESIDUAL_TOL};
use maxproc::Execution;
use serde::Serialize;

use crate::args::{Command, PlotTarget, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{companion, Outputs};
use crate::svg::{Plot, Series, Style};

/// Staged outputs plus the name of a failed check, if any.
#[derive(Debug, Default)]
pub struct Completed {
    pub outputs: Outputs,
    pub failure: Option<String>,
}

impl From<Outputs> for Completed {
    fn from(outputs: Outputs) -> Self {
        Self { outputs, failure: None }
    }
}

/// Upper bound on grid nodes, to reject runaway requests before allocating.
const MAX_NODES: f64 = 2e6;
/// Tolerance for the scaling check `G_a(r) = a^{-1/2} G_1(r/a)`.
const SCALING_TOL: f64 = CROSS_METHOD_TOL;
/// Default `G_a` grid: `dx = a / G_DX_PER_A` on `[0, G_RMAX_IN_A * a]`.
const G_DX_PER_A: f64 = 400.0;
const G_RMAX_IN_A: f64 = 8.0;
/// Default step of `h` tables and gap densities: `dx = b / DX_PER_B`.
const DX_PER_B: f64 = 400.0;
/// Default gap window, in units of `sqrt(ab)`.
const GAP_RMAX_IN_MEAN_SPACING: f64 = 20.0;
/// Window of the `G_a` plots, in units of `a`.
const PLOT_RMAX_IN_A: f64 = 5.0;
/// Bisection width for `rho`.
const RHO_TOL: f64 = 1e-10;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("--{name} must be a positive finite number, got {v}")))
    }
}

/// `dx` and `rmax` with `rmax >= dx` and a bounded node count.
fn grid_window(dx: f64, rmax: f64) -> CliResult<(f64, f64)> {
    let (dx, rmax) = (positive("dx", dx)?, positive("rmax", rmax)?);
    if rmax < dx {
        return Err(invalid(format!("--rmax {rmax} is smaller than --dx {dx}")));
    }
    if rmax / dx > MAX_NODES {
        return Err(invalid(format!(
            "--rmax / --dx = {} exceeds {MAX_NODES} nodes",
            rmax / dx
        )));
    }
    Ok((dx, rmax))
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(maxproc::Error::from)?;
    s.push('\n');
    Ok(s)
}

pub fn run(command: &Command, cfg: &RunConfig) -> CliResult<Completed> {
    match command {
        Command::TabulateH => tabulate_h(cfg).map(Into::into),
        Command::SolveG => solve_g(cfg).map(Into::into),
        Command::GapDensity => gap_density(cfg).map(Into::into),
        Command::LaplaceCheck => laplace_check(cfg),
        Command::Rho => rho(cfg).map(Into::into),
        Command::Simulate { gaps_out } => simulate_cmd(cfg, gaps_out.as_deref()).map(Into::into),
        Command::Verify => verify_cmd(cfg),
        Command::Plot { target } => plot(cfg, *target).map(Into::into),
    }
}

/// `h` is constant past `a + b`; half as much again shows the plateau.
fn h_rmax(p: &ProcessParams) -> f64 {
    1.5 * (p.a() + p.b())
}

fn params(cfg: &RunConfig) -> CliResult<ProcessParams> {
    Ok(ProcessParams::new(
        positive("a", cfg.a)?,
        positive("b", cfg.b_or_default())?,
    )?)
}

pub fn tabulate_h(cfg: &RunConfig) -> CliResult<Outputs> {
    let p = params(cfg)?;
    let (dx, rmax) = grid_window(cfg.dx.unwrap_or(p.b() / DX_PER_B), cfg.rmax_or(h_rmax(&p)))?;
    let n = (rmax / dx).round() as usize;
    let mut csv = String::from("r,h\n");
    for k in 0..=n {
        let r = k as f64 * dx;
        let _ = writeln!(csv, "{},{}", fmt_num(r), fmt_num(eval_h(&p, r)));
    }
    let mut out = Outputs::default();
    out.primary(cfg.out.as_deref(), csv);
    Ok(out)
}

#[derive(Debug, Serialize)]
struct ScalingCheck {
    reference_a: f64,
    max_abs_err: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct SolveMeta {
    a: f64,
    b: f64,
    dx: f64,
    r_max: f64,
    methods: Vec<&'static str>,
    singular_coeff: f64,
    max_residual: BTreeMap<String, f64>,
    residual_bound: f64,
    discrepancies: BTreeMap<String, f64>,
    discrepancy_bound: f64,
    scaling: ScalingCheck,
}

/// `G_a` against `a^{-1/2} G_1(r/a)`, both by the series on the same `dx`, so
/// the comparison goes through interpolation rather than a rescaled grid.
fn scaling_check(a: f64, dx: f64, rmax: f64) -> CliResult<ScalingCheck> {
    let series = maxproc::grid_calc::LevyMethod::Series;
    let ga = levy_tail(series, &ProcessParams::new(a, a)?, dx, rmax)?;
    let g1 = levy_tail(series, &ProcessParams::new(1.0, 1.0)?, dx, rmax / a)?;
    let max_abs_err = (1..ga.grid().len())
        .map(|k| ga.grid().node(k))
        .filter(|&r| g1.grid().covers(r / a))
        .map(|r| (ga.grid().eval(r) - g1.grid().eval(r / a) / a.sqrt()).abs())
        .fold(0.0, f64::max);
    Ok(ScalingCheck {
        reference_a: 1.0,
        max_abs_err,
        tolerance: SCALING_TOL,
        pass: max_abs_err <= SCALING_TOL,
    })
}

/// Solves for `G_a` by the selected methods, on `dx = a/400` and `[0, rmax_in_a * a]`
/// unless overridden.
fn solve_tails(cfg: &RunConfig, rmax_in_a: f64) -> CliResult<(ProcessParams, f64, f64, Vec<LevyTail>)> {
    let a = positive("a", cfg.a)?;
    let p = ProcessParams::new(a, positive("b", cfg.b.unwrap_or(a))?)?;
    let (dx, rmax) = grid_window(cfg.dx.unwrap_or(a / G_DX_PER_A), cfg.rmax_or(rmax_in_a * a))?;
    let tails = cfg
        .method
        .methods()
        .into_iter()
        .map(|m| levy_tail(m, &p, dx, rmax))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((p, dx, rmax, tails))
}

fn columns_csv(first: &str, tails: &[LevyTail], rows: &[Vec<(f64, f64)>]) -> String {
    let mut csv = String::from(first);
    for t in tails {
        csv.push(',');
        csv.push_str(t.method().name());
    }
    csv.push('\n');
    for i in 0..rows[0].len() {
        csv.push_str(&fmt_num(rows[0][i].0));
        for col in rows {
            csv.push(',');
            csv.push_str(&fmt_num(col[i].1));
        }
        csv.push('\n');
    }
    csv
}

pub fn solve_g(cfg: &RunConfig) -> CliResult<Outputs> {
    let (p, dx, rmax, tails) = solve_tails(cfg, G_RMAX_IN_A)?;
    let table: Vec<Vec<(f64, f64)>> = tails.iter().map(LevyTail::table).collect();
    let mut max_residual = BTreeMap::new();
    let residuals: Vec<Vec<(f64, f64)>> = tails.iter().map(abel_residual).collect();
    for (t, res) in tails.iter().zip(&residuals) {
        max_residual.insert(
            t.method().name().to_string(),
            res.iter().map(|r| r.1.abs()).fold(0.0, f64::max),
        );
    }
    let mut discrepancies = BTreeMap::new();
    for i in 0..tails.len() {
        for j in i + 1..tails.len() {
            let key = format!("{}-{}", tails[i].method().name(), tails[j].method().name());
            discrepancies.insert(key, max_discrepancy(&tails[i], &tails[j], 0.0, rmax)?);
        }
    }
    let meta = SolveMeta {
        a: p.a(),
        b: p.b(),
        dx,
        r_max: rmax,
        methods: tails.iter().map(|t| t.method().name()).collect(),
        singular_coeff: tails[0].grid().singular_coeff(),
        max_residual,
        residual_bound: RESIDUAL_TOL * (2.0 * std::f64::consts::PI).sqrt(),
        discrepancies,
        discrepancy_bound: CROSS_METHOD_TOL,
        scaling: scaling_check(p.a(), dx, rmax)?,
    };
    let mut out = Outputs::default();
    let csv = columns_csv("r", &tails, &table);
    match cfg.out.as_deref() {
        Some(path) => {
            out.file(path, csv);
            out.file(companion(path, "json"), to_json(&meta)?);
            if tails.len() > 1 {
                out.file(companion(path, "residual.csv"), columns_csv("r", &tails, &residuals));
            }
        }
        None => {
            out.primary(None, csv);
            eprint!("{}", to_json(&meta)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct GapMeta {
    a: f64,
    b: f64,
    dx: f64,
    r_max: f64,
    total_mass: f64,
    mean: f64,
    target_mean: f64,
    tail_rate: f64,
}

fn gap_law(cfg: &RunConfig, p: &ProcessParams, default_dx: f64, default_rmax: f64) -> CliResult<(f64, f64, GapLaw)> {
    let (dx, rmax) = grid_window(cfg.dx.unwrap_or(default_dx), cfg.rmax_or(default_rmax))?;
    Ok((dx, rmax, GapLaw::compute(p, dx, rmax)?))
}

pub fn gap_density(cfg: &RunConfig) -> CliResult<Outputs> {
    let p = params(cfg)?;
    let (dx, rmax, law) = gap_law(
        cfg,
        &p,
        p.b() / DX_PER_B,
        GAP_RMAX_IN_MEAN_SPACING * (p.a() * p.b()).sqrt(),
    )?;
    let g = law.grid();
    let mut csv = String::from("r,g,cdf\n");
    for k in 0..g.len() {
        let r = g.node(k);
        let _ = writeln!(csv, "{},{},{}", fmt_num(r), fmt_num(g.values()[k]), fmt_num(law.cdf(r)));
    }
    let meta = GapMeta {
        a: p.a(),
        b: p.b(),
        dx,
        r_max: rmax,
        total_mass: law.total_mass(),
        mean: law.mean(),
        target_mean: p.mean_gap(),
        tail_rate: law.tail_rate(),
    };
    let mut out = Outputs::default();
    match cfg.out.as_deref() {
        Some(path) => {
            out.file(path, csv);
            out.file(companion(path, "json"), to_json(&meta)?);
        }
        None => {
            out.primary(None, csv);
            eprint!("{}", to_json(&meta)?);
        }
    }
    Ok(out)
}

pub fn laplace_check(cfg: &RunConfig) -> CliResult<Completed> {
    if cfg.thetas.is_empty() {
        return Err(invalid("--theta needs at least one value"));
    }
    for &t in &cfg.thetas {
        positive("theta", t)?;
    }
    let (p, _, _, tails) = solve_tails(cfg, G_RMAX_IN_A)?;
    let rate = tail_constants().rate_for_a(p.a());
    let mut csv = String::from("method,theta,numeric,closed,rel_err\n");
    let mut worst: Option<(f64, String)> = None;
    for t in &tails {
        let model = TailModel::fit_exponential(t.grid(), rate);
        for &theta in &cfg.thetas {
            let numeric = laplace_numeric(t.grid(), theta, model)?;
            let closed = laplace_g_closed(p.a(), theta)?;
            let rel = (numeric / closed - 1.0).abs();
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                t.method().name(),
                fmt_num(theta),
                fmt_num(numeric),
                fmt_num(closed),
                fmt_num(rel)
            );
            if rel > LAPLACE_REL_TOL && worst.as_ref().is_none_or(|w| rel > w.0) {
                worst = Some((
                    rel,
                    format!(
                        "{} at theta = {theta}: relative error {rel:.3e} > {LAPLACE_REL_TOL}",
                        t.method().name()
                    ),
                ));
            }
        }
    }
    let mut out = Outputs::default();
    out.primary(cfg.out.as_deref(), csv);
    Ok(Completed {
        outputs: out,
        failure: worst.map(|w| w.1),
    })
}

#[derive(Debug, Serialize)]
struct RhoReport {
    rho: f64,
    tolerance: f64,
    lambda: f64,
    a: f64,
    /// `G_a(r) ~ amplitude * exp(-rate * r)`.
    amplitude: f64,
    rate: f64,
}

pub fn rho(cfg: &RunConfig) -> CliResult<Outputs> {
    let a = positive("a", cfg.a)?;
    let rho = find_rho(RHO_TOL)?;
    let tc = TailConstants::compute(RHO_TOL)?;
    let report = RhoReport {
        rho,
        tolerance: RHO_TOL,
        lambda: tc.lambda,
        a,
        amplitude: tc.amplitude_for_a(a),
        rate: tc.rate_for_a(a),
    };
    let mut out = Outputs::default();
    out.primary(cfg.out.as_deref(), to_json(&report)?);
    Ok(out)
}

fn path_config(cfg: &RunConfig) -> CliResult<PathConfig> {
    if cfg.paths < 2 {
        return Err(invalid(format!("--paths must be at least 2, got {}", cfg.paths)));
    }
    Ok(PathConfig::new(
        positive("dt", cfg.dt)?,
        positive("horizon", cfg.horizon)?,
        cfg.seed,
        cfg.paths,
    )?)
}

pub fn simulate_cmd(cfg: &RunConfig, gaps_out: Option<&std::path::Path>) -> CliResult<Outputs> {
    let p = params(cfg)?;
    let pc = path_config(cfg)?;
    pc.validate_for(&p)?;
    let (_, _, law) = gap_law(cfg, &p, p.b() / 100.0, 10.0 * (p.a() + p.b()))?;
    let outcomes = simulate(&pc, &p, Execution::default())?;
    let summary = summarize(&pc, &p, &law, &outcomes)?;
    let mut out = Outputs::default();
    out.primary(cfg.out.as_deref(), to_json(&summary)?);
    if let Some(path) = gaps_out {
        let mut csv = String::from("gap\n");
        for g in pooled_gaps(&p, &outcomes) {
            let _ = writeln!(csv, "{}", fmt_num(g));
        }
        out.file(path, csv);
    }
    Ok(out)
}

pub fn verify_cmd(cfg: &RunConfig) -> CliResult<Completed> {
    let settings = VerifySettings::new(cfg.profile, cfg.seed);
    let report = verify::verify(&settings)?;
    let mut out = Outputs::default();
    out.primary(cfg.out.as_deref(), to_json(&report)?);
    let failure = report
        .first_failure()
        .map(|c| format!("criterion {} ({})", c.id, c.name));
    Ok(Completed { outputs: out, failure })
}

fn sampled(n: usize, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    (0..=n)
        .map(|k| lo + (hi - lo) * k as f64 / n as f64)
        .map(|r| (r, f(r)))
        .collect()
}

pub fn plot(cfg: &RunConfig, target: PlotTarget) -> CliResult<Outputs> {
    let path = cfg.out.as_deref().ok_or_else(|| invalid("plot needs --out"))?;
    let plot = match target {
        PlotTarget::G1 | PlotTarget::LnG1 => {
            let mut c = cfg.clone();
            c.method = crate::args::MethodArg::Series;
            let (p, _, _, tails) = solve_tails(&c, PLOT_RMAX_IN_A)?;
            let a = p.a();
            let lo = 0.01 * a;
            let pts: Vec<(f64, f64)> = tails[0].table().into_iter().filter(|&(r, _)| r >= lo).collect();
            if target == PlotTarget::G1 {
                Plot {
                    title: format!("G_a, a = {a}"),
                    x_label: "r".into(),
                    y_label: "G_a(r)".into(),
                    series: vec![Series::new("G_a", pts, Style::Line)],
                }
            } else {
                let tc = tail_constants();
                let (amp, rate) = (tc.amplitude_for_a(a), tc.rate_for_a(a));
                let (r0, r1) = (pts[0].0, pts[pts.len() - 1].0);
                Plot {
                    title: format!("ln G_a, a = {a}"),
                    x_label: "r".into(),
                    y_label: "ln G_a(r)".into(),
                    series: vec![
                        Series::new("ln G_a", pts.iter().map(|&(r, v)| (r, v.ln())).collect(), Style::Line),
                        Series::new(
                            format!("-{:.4} r + ln {:.4}", rate, amp),
                            vec![(r0, amp.ln() - rate * r0), (r1, amp.ln() - rate * r1)],
                            Style::Dashed,
                        ),
                    ],
                }
            }
        }
        PlotTarget::H => {
            let p = params(cfg)?;
            let rmax = positive("rmax", cfg.rmax_or(h_rmax(&p)))?;
            Plot {
                title: format!("h, a = {}, b = {}", p.a(), p.b()),
                x_label: "r".into(),
                y_label: "h(r)".into(),
                series: vec![Series::new(
                    "h",
                    sampled(2000, 0.0, rmax, |r| eval_h(&p, r)),
                    Style::Line,
                )],
            }
        }
        PlotTarget::GapDensity => {
            let p = params(cfg)?;
            let (_, _, law) = gap_law(
                cfg,
                &p,
                p.b() / DX_PER_B,
                GAP_RMAX_IN_MEAN_SPACING * (p.a() * p.b()).sqrt(),
            )?;
            let g = law.grid();
            let step = (g.len() / 2000).max(1);
            let pts = (0..g.len()).step_by(step).map(|k| (g.node(k), g.values()[k])).collect();
            Plot {
                title: format!("gap density, a = {}, b = {}", p.a(), p.b()),
                x_label: "r".into(),
                y_label: "g(r)".into(),
                series: vec![Series::new("g", pts, Style::Line)],
            }
        }
        PlotTarget::PairCorrOverlay => {
            let p = params(cfg)?;
            let pc = path_config(cfg)?;
            let rmax = positive("rmax", cfg.rmax_or(p.a() + 3.0 * p.b()))?;
            let outcomes = simulate(&pc, &p, Execution::default())?;
            let samples: Vec<PointSample> = outcomes.into_iter().map(|o| o.points).collect();
            let est = estimate_pair_correlation(&samples, 0.1 * p.b(), rmax)?;
            let hist = (0..est.len()).map(|k| (est.node(k), est.values()[k])).collect();
            Plot {
                title: format!("pair correlation, a = {}, b = {}", p.a(), p.b()),
                x_label: "r".into(),
                y_label: "h(r)".into(),
                series: vec![
                    Series::new("simulated", hist, Style::Steps),
                    Series::new("h", sampled(2000, 0.0, rmax, |r| p.h(r)), Style::Line),
                ],
            }
        }
    };
    let mut out = Outputs::default();
    out.file(path, plot.render());
    Ok(out)
}
