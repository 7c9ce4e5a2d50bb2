//! The Levy tail `G_a(r) = nu_a(r, inf)` of the subordinator whose closed range
//! is the trailing-window record set `R_a`, computed three independent ways:
//!
//! * `Series`: `G_a = sum_n (-1)^n u * h_{inf,a}^{*n}` with `u(r) = sqrt(2/(pi r))`;
//! * `VolterraAbel`: forward marching on `int_0^x (y ^ a)^{-1/2} G_a(x-y) dy = sqrt(2 pi)`;
//! * `RecursionHb`: `G_a(x) = G_a(b) - int_0^x h_{a,b}(y) G_a(x-y) dy` for `x >= b`.
//!
//! All three keep `G_a = C r^{-1/2} + R(r)` with `C = sqrt(2/pi)` carried
//! exactly, so only the regular remainder `R` (zero on `[0, a]`) is discretized.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::grid::{conv_grid_with, AbelWeights, GridFunction};
use super::kernel::{eval_h_infinity, PairKernel};
use crate::error::{Error, Result};
use crate::par::Execution;

/// `sqrt(2/pi)`, the coefficient of `r^{-1/2}` in `G_a` near the origin.
pub fn u_coeff() -> f64 {
    (2.0 / PI).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevyMethod {
    Series,
    VolterraAbel,
    RecursionHb,
}

impl LevyMethod {
    pub const ALL: [LevyMethod; 3] = [LevyMethod::Series, LevyMethod::VolterraAbel, LevyMethod::RecursionHb];

    pub fn name(self) -> &'static str {
        match self {
            LevyMethod::Series => "series",
            LevyMethod::VolterraAbel => "volterra_abel",
            LevyMethod::RecursionHb => "recursion_hb",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyTail {
    a: f64,
    grid: GridFunction,
    method: LevyMethod,
}

impl LevyTail {
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn grid(&self) -> &GridFunction {
        &self.grid
    }

    pub fn method(&self) -> LevyMethod {
        self.method
    }

    /// `G_a(r)`; infinite at 0, zero for `r < 0`.
    pub fn eval(&self, r: f64) -> f64 {
        if r < 0.0 {
            0.0
        } else {
            self.grid.eval(r)
        }
    }

    /// `(r_k, G_a(r_k))` for every node `r_k > 0`.
    pub fn table(&self) -> Vec<(f64, f64)> {
        (1..self.grid.len())
            .map(|k| (self.grid.node(k), self.grid.value_at_node(k)))
            .collect()
    }

    /// Density of `nu_a` at nodes `r_k > 0`: `(C/2) r^{-3/2} - R'(r)`, with
    /// `R'` from finite differences.
    pub fn density(&self) -> Result<GridFunction> {
        let g = &self.grid;
        let dx = g.dx();
        let v = g.values();
        let n = g.len();
        if n < 3 {
            return Err(Error::InsufficientData("need at least 3 nodes".into()));
        }
        let c = g.singular_coeff();
        let out = (1..n)
            .map(|k| {
                let x = g.node(k);
                let dr = if k + 1 < n {
                    (v[k + 1] - v[k - 1]) / (2.0 * dx)
                } else {
                    (v[k] - v[k - 1]) / dx
                };
                0.5 * c * x.powf(-1.5) - dr
            })
            .collect();
        GridFunction::new(dx, dx, out)
    }
}

fn grid_len(dx: f64, r_max: f64) -> Result<usize> {
    if !(dx > 0.0) || !(r_max > 0.0) || !r_max.is_finite() {
        return Err(Error::InvalidParams(format!(
            "need dx > 0 and finite r_max > 0, got dx={dx}, r_max={r_max}"
        )));
    }
    Ok((r_max / dx).round() as usize + 1)
}

fn check_resolution(dx: f64, limit: f64) -> Result<()> {
    if dx > limit * (1.0 + 1e-12) {
        return Err(Error::ResolutionTooCoarse { dx, limit });
    }
    Ok(())
}

/// Closed form `nu_a[r, inf) = sqrt(2/(pi r))`, valid for `0 < r <= a`.
pub fn levy_measure_tail_closed(a: f64, r: f64) -> Result<f64> {
    if !(a > 0.0) || !(r > 0.0) || r > a {
        return Err(Error::DomainError(format!("r = {r} not in (0, {a}]")));
    }
    Ok((2.0 / (PI * r)).sqrt())
}

/// Alternating series, summed in nested form `G <- u - h_{inf,a} * G`.
///
/// `u * h^{*n}` is supported on `[na, inf)`, so `ceil(r_max/a) + 1` rounds are
/// exact on the window; the nested form yields the same partial sum without
/// forming the large individual terms.
pub fn levy_tail_series(a: f64, dx: f64, r_max: f64) -> Result<LevyTail> {
    levy_tail_series_with(a, dx, r_max, Execution::default())
}

pub fn levy_tail_series_with(a: f64, dx: f64, r_max: f64, exec: Execution) -> Result<LevyTail> {
    if !(a > 0.0) {
        return Err(Error::InvalidParams(format!("a must be > 0, got {a}")));
    }
    check_resolution(dx, a / 100.0)?;
    let n = grid_len(dx, r_max)?;
    let h_inf = GridFunction::sample(0.0, dx, n, |r| eval_h_infinity(a, r))?;
    let u = GridFunction::with_singular(dx, vec![0.0; n], u_coeff())?;
    let rounds = (r_max / a).ceil() as usize + 1;
    let mut g = u.clone();
    for _ in 0..rounds {
        let conv = conv_grid_with(&h_inf, &g, exec)?;
        g = u.add_scaled(&conv, -1.0)?;
    }
    Ok(LevyTail {
        a,
        grid: g,
        method: LevyMethod::Series,
    })
}

/// Individual series term `u * h_{inf,a}^{*n}` (regular grid).
pub fn levy_series_term(a: f64, dx: f64, r_max: f64, n: usize) -> Result<GridFunction> {
    let len = grid_len(dx, r_max)?;
    let h_inf = GridFunction::sample(0.0, dx, len, |r| eval_h_infinity(a, r))?;
    let mut t = GridFunction::with_singular(dx, vec![0.0; len], u_coeff())?;
    for _ in 0..n {
        t = conv_grid_with(&h_inf, &t, Execution::default())?;
    }
    Ok(t)
}

/// Cell weights of `k(y) = (y ^ a)^{-1/2}` against the two hat functions of a
/// piecewise-linear unknown.
struct KernelWeights {
    left: Vec<f64>,
    right: Vec<f64>,
}

impl KernelWeights {
    fn new(a: f64, dx: f64, cells: usize) -> Self {
        let abel = AbelWeights::new(cells, dx);
        let inv_sqrt_a = 1.0 / a.sqrt();
        let mut left = Vec::with_capacity(cells);
        let mut right = Vec::with_capacity(cells);
        for j in 0..cells {
            let (p, q) = (j as f64 * dx, (j + 1) as f64 * dx);
            if q <= a * (1.0 + 1e-12) {
                left.push(abel.left(j));
                right.push(abel.right(j));
            } else if p >= a * (1.0 - 1e-12) {
                left.push(0.5 * dx * inv_sqrt_a);
                right.push(0.5 * dx * inv_sqrt_a);
            } else {
                // straddles a: y^{-1/2} on [p, a], a^{-1/2} on [a, q]
                let m0 = 2.0 * (a.sqrt() - p.sqrt()) + (q - a) * inv_sqrt_a;
                let m1 = 2.0 / 3.0 * (a.powf(1.5) - p.powf(1.5)) + 0.5 * (q * q - a * a) * inv_sqrt_a;
                left.push((q * m0 - m1) / dx);
                right.push((m1 - p * m0) / dx);
            }
        }
        Self { left, right }
    }

    /// `int_0^{x_n} k(y) R(x_n - y) dy` for node values `r[0..=n]`.
    fn apply(&self, r: &[f64], n: usize) -> f64 {
        (0..n)
            .map(|j| self.left[j] * r[n - j] + self.right[j] * r[n - j - 1])
            .sum()
    }
}

/// `int_0^x (y ^ a)^{-1/2} (x - y)^{-1/2} dy`: `pi` for `x <= a`,
/// `2 asin(sqrt(a/x)) + 2 sqrt((x-a)/a)` beyond.
fn abel_singular_integral(a: f64, x: f64) -> f64 {
    if x <= a {
        PI
    } else {
        2.0 * (a / x).sqrt().asin() + 2.0 * ((x - a) / a).sqrt()
    }
}

/// Product-integration marching for the first-kind equation
/// `int_0^x (y ^ a)^{-1/2} G_a(x-y) dy = sqrt(2 pi)`.
///
/// With `G = C r^{-1/2} + R` the singular part is integrated in closed form and
/// the newest `R` value is solved from the first-cell kernel moment.
pub fn levy_tail_volterra_abel(a: f64, dx: f64, r_max: f64) -> Result<LevyTail> {
    if !(a > 0.0) {
        return Err(Error::InvalidParams(format!("a must be > 0, got {a}")));
    }
    check_resolution(dx, a / 100.0)?;
    let n = grid_len(dx, r_max)?;
    let c = u_coeff();
    let rhs = (2.0 * PI).sqrt();
    let kw = KernelWeights::new(a, dx, n.max(1));
    let lead = kw.left[0];
    if !(lead.is_normal() && lead > 1e2 * f64::MIN_POSITIVE) {
        return Err(Error::SingularStep(lead));
    }
    let mut r = vec![0.0; n];
    for m in 1..n {
        let x = m as f64 * dx;
        if x <= a * (1.0 + 1e-12) {
            continue;
        }
        let target = rhs - c * abel_singular_integral(a, x);
        // history: every term of apply() except the R[m] coefficient left[0]
        let history = kw.apply(&r, m) - lead * r[m];
        r[m] = (target - history) / lead;
    }
    Ok(LevyTail {
        a,
        grid: GridFunction::with_singular(dx, r, c)?,
        method: LevyMethod::VolterraAbel,
    })
}

/// Explicit march of `G_a(x) = G_a(b) - int_0^x h_{a,b}(y) G_a(x-y) dy`,
/// started from the closed form on `(0, b]`.
pub fn levy_tail_recursion(kernel: &dyn PairKernel, dx: f64, r_max: f64) -> Result<LevyTail> {
    levy_tail_recursion_with(kernel, dx, r_max, Execution::default())
}

pub fn levy_tail_recursion_with(kernel: &dyn PairKernel, dx: f64, r_max: f64, exec: Execution) -> Result<LevyTail> {
    let p = kernel.params();
    let (a, b) = (p.a(), p.b());
    check_resolution(dx, b / 50.0)?;
    let n = grid_len(dx, r_max)?;
    let c = u_coeff();
    let h = GridFunction::sample(0.0, dx, n, |r| kernel.h(r))?;
    let u = GridFunction::with_singular(dx, vec![0.0; n], c)?;
    // C int_0^x s^{-1/2} h(x - s) ds, fixed for the whole march
    let singular_part = conv_grid_with(&h, &u, exec)?;
    let hv = h.values();
    let g_b = c / b.sqrt();
    let mut r = vec![0.0; n];
    for m in 1..n {
        let x = m as f64 * dx;
        if x <= b * (1.0 + 1e-12) {
            continue;
        }
        // trapezoid for int_0^x h(x - s) R(s) ds; h(0) = 0 so R[m] drops out
        let mut acc: f64 = (0..m).map(|k| hv[m - k] * r[k]).sum();
        acc -= 0.5 * hv[m] * r[0];
        let g_x = g_b - singular_part.values()[m] - acc * dx;
        r[m] = g_x - c / x.sqrt();
    }
    Ok(LevyTail {
        a,
        grid: GridFunction::with_singular(dx, r, c)?,
        method: LevyMethod::RecursionHb,
    })
}

pub fn levy_tail(method: LevyMethod, kernel: &dyn PairKernel, dx: f64, r_max: f64) -> Result<LevyTail> {
    let a = kernel.params().a();
    match method {
        LevyMethod::Series => levy_tail_series(a, dx, r_max),
        LevyMethod::VolterraAbel => levy_tail_volterra_abel(a, dx, r_max),
        LevyMethod::RecursionHb => levy_tail_recursion(kernel, dx, r_max),
    }
}

/// Residual `int_0^x (y ^ a)^{-1/2} G_a(x-y) dy - sqrt(2 pi)` at every node `x > 0`.
pub fn abel_residual(tail: &LevyTail) -> Vec<(f64, f64)> {
    let g = tail.grid();
    let n = g.len();
    let kw = KernelWeights::new(tail.a, g.dx(), n.max(1));
    let rhs = (2.0 * PI).sqrt();
    (1..n)
        .map(|m| {
            let x = g.node(m);
            let lhs = g.singular_coeff() * abel_singular_integral(tail.a, x) + kw.apply(g.values(), m);
            (x, lhs - rhs)
        })
        .collect()
}

/// Largest `|G - G'|` over common nodes in `[lo, hi]`, excluding the origin.
pub fn max_discrepancy(x: &LevyTail, y: &LevyTail, lo: f64, hi: f64) -> Result<f64> {
    let (gx, gy) = (x.grid(), y.grid());
    if (gx.dx() - gy.dx()).abs() > 1e-12 * gx.dx() {
        return Err(Error::GridMismatch(gx.dx(), gy.dx()));
    }
    let n = gx.len().min(gy.len());
    Ok((1..n)
        .filter(|&k| {
            let r = gx.node(k);
            r >= lo - 1e-12 && r <= hi + 1e-12
        })
        .map(|k| (gx.value_at_node(k) - gy.value_at_node(k)).abs())
        .fold(0.0, f64::max))
}

/// Closed forms: `sqrt(2/(pi r))` on `(0, a]`, `2 sqrt(2/(pi r)) - sqrt(2/(pi a))` on `[a, 2a]`.
pub fn levy_tail_anchor(a: f64, r: f64) -> Option<f64> {
    let c = u_coeff();
    if r > 0.0 && r <= a {
        Some(c / r.sqrt())
    } else if r > a && r <= 2.0 * a {
        Some(2.0 * c / r.sqrt() - c / a.sqrt())
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_calc::kernel::ProcessParams;

    const DX: f64 = 1.0 / 400.0;

    fn anchor_error(t: &LevyTail, lo: f64, hi: f64) -> f64 {
        t.table()
            .into_iter()
            .filter(|(r, _)| *r >= lo && *r <= hi)
            .map(|(r, v)| (v - levy_tail_anchor(t.a(), r).unwrap()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn closed_tail_values() {
        assert!((levy_measure_tail_closed(1.0, 0.25).unwrap() - 1.595_769_121_605_731).abs() < 1e-14);
        assert!((levy_measure_tail_closed(1.0, 1.0).unwrap() - 0.797_884_560_802_865_4).abs() < 1e-15);
        assert_eq!(
            levy_measure_tail_closed(4.0, 1.0).unwrap(),
            levy_measure_tail_closed(1.0, 1.0).unwrap()
        );
        assert!(levy_measure_tail_closed(1.0, 1.5).is_err());
        assert!(levy_measure_tail_closed(1.0, 0.0).is_err());
    }

    #[test]
    fn series_matches_closed_forms() {
        let t = levy_tail_series(1.0, DX, 3.0).unwrap();
        assert!((t.eval(1.0) - 0.797_884_560_802_865_4).abs() < 1e-12);
        assert!((t.eval(1.5) - 0.505_055_470_938_254_4).abs() < 1e-3);
        assert!((t.eval(2.0) - 0.330_494_606_292_647_2).abs() < 1e-3);
        // the regular remainder vanishes identically on [0, a]
        assert!(t.grid().values()[..=400].iter().all(|&v| v == 0.0));
        assert!(anchor_error(&t, 0.05, 2.0) < 1e-3);
    }

    #[test]
    fn series_term_supports() {
        for n in 1..=3 {
            let term = levy_series_term(1.0, DX, 4.0, n).unwrap();
            let below: f64 = term
                .values()
                .iter()
                .enumerate()
                .filter(|(k, _)| (*k as f64) * DX < n as f64 - 1e-9)
                .map(|(_, v)| v.abs())
                .fold(0.0, f64::max);
            assert_eq!(below, 0.0, "term {n}");
        }
        // first term closed form on [a, inf)
        let t1 = levy_series_term(1.0, DX, 4.0, 1).unwrap();
        for &r in &[1.5f64, 2.0, 3.5] {
            let exact = u_coeff() * (1.0 - 1.0 / r.sqrt());
            assert!((t1.eval(r) - exact).abs() < 1e-3, "r={r}");
        }
    }

    #[test]
    fn volterra_matches_closed_forms_and_series() {
        let v = levy_tail_volterra_abel(1.0, DX, 3.5).unwrap();
        assert!(anchor_error(&v, 1.0, 2.0) < 1e-3);
        let s = levy_tail_series(1.0, DX, 3.5).unwrap();
        assert!((v.eval(3.0) - s.eval(3.0)).abs() < 2e-3);
        let worst = abel_residual(&v).into_iter().map(|(_, e)| e.abs()).fold(0.0, f64::max);
        assert!(worst < 1e-10);
    }

    #[test]
    fn recursion_consistent_on_known_segment() {
        let p = ProcessParams::new(1.0, 0.5).unwrap();
        let t = levy_tail_recursion(&p, DX, 2.0).unwrap();
        for (r, v) in t.table() {
            if r > 0.5 && r <= 1.0 {
                assert!((v - u_coeff() / r.sqrt()).abs() < 1e-3, "r={r}");
            }
        }
        let s = levy_tail_series(1.0, DX, 2.0).unwrap();
        assert!((t.eval(1.5) - s.eval(1.5)).abs() < 2e-3);
    }

    #[test]
    fn recursion_with_equal_reaches_tracks_volterra() {
        let p = ProcessParams::new(1.0, 1.0).unwrap();
        let t = levy_tail_recursion(&p, DX, 5.0).unwrap();
        let v = levy_tail_volterra_abel(1.0, DX, 5.0).unwrap();
        assert!(max_discrepancy(&t, &v, 0.0, 5.0).unwrap() < 2e-3);
    }

    #[test]
    fn scaling_law() {
        let g1 = levy_tail_series(1.0, DX, 6.0).unwrap();
        let g2 = levy_tail_series(2.0, 2.0 * DX, 12.0).unwrap();
        for &r in &[0.5, 1.7, 3.0, 5.5, 9.0, 11.0] {
            let lhs = g2.eval(r);
            let rhs = g1.eval(r / 2.0) / 2f64.sqrt();
            assert!((lhs - rhs).abs() < 1e-3, "r={r}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn monotone_and_positive() {
        let g = levy_tail_series(1.0, DX, 8.0).unwrap();
        let tab = g.table();
        assert!(tab.iter().all(|&(_, v)| v > 0.0));
        assert!(tab.windows(2).all(|w| w[1].1 <= w[0].1));
        let d = g.density().unwrap();
        assert!(d.values().iter().all(|&v| v > -1e-3));
    }

    #[test]
    fn resolution_guard() {
        assert!(matches!(
            levy_tail_series(1.0, 0.02, 2.0),
            Err(Error::ResolutionTooCoarse { .. })
        ));
        assert!(matches!(
            levy_tail_volterra_abel(1.0, 0.02, 2.0),
            Err(Error::ResolutionTooCoarse { .. })
        ));
        let p = ProcessParams::new(1.0, 0.5).unwrap();
        assert!(matches!(
            levy_tail_recursion(&p, 0.02, 2.0),
            Err(Error::ResolutionTooCoarse { .. })
        ));
    }

    #[test]
    fn execution_modes_agree_exactly() {
        let seq = levy_tail_series_with(1.0, 0.01, 4.0, Execution::Sequential).unwrap();
        let par = levy_tail_series_with(1.0, 0.01, 4.0, Execution::Parallel).unwrap();
        assert_eq!(seq.grid().values(), par.grid().values());
        let p = ProcessParams::new(2.0, 1.0).unwrap();
        let seq = levy_tail_recursion_with(&p, 0.01, 6.0, Execution::Sequential).unwrap();
        let par = levy_tail_recursion_with(&p, 0.01, 6.0, Execution::Parallel).unwrap();
        assert_eq!(seq.grid().values(), par.grid().values());
    }
}
