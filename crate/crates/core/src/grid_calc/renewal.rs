//! Gap law of the renewal process of local maxima: the density
//! `g = sum_{n>=1} (-1)^{n-1} h^{*n}`, its tail-completed CDF and moments, the
//! first-point and `(T_0, T_1)` densities, and the gap Laplace transform
//! expressed through the Levy measure.

use std::f64::consts::PI;

use super::grid::{conv_grid_with, GridFunction};
use super::kernel::{PairKernel, ProcessParams};
use super::laplace::{laplace_numeric, TailModel};
use super::levy::LevyTail;
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::special_fn::{kummer_m, laplace_g_closed, tail_constants, KummerParams};

/// Alternating convolution series for the gap density on `[0, r_max]`.
///
/// `supp h^{*n}` lies in `[nb, inf)`, so `ceil(r_max/b) + 1` terms are exact on
/// the window. The partial sum is built in nested form `S <- h - h * S`, which
/// equals `sum_{n<=N} (-1)^{n-1} h^{*n}` term for term without materializing
/// the fast-growing individual powers.
pub fn gap_density_series(kernel: &dyn PairKernel, dx: f64, r_max: f64) -> Result<GridFunction> {
    gap_density_series_with(kernel, dx, r_max, Execution::default())
}

pub fn gap_density_series_with(kernel: &dyn PairKernel, dx: f64, r_max: f64, exec: Execution) -> Result<GridFunction> {
    let b = kernel.params().b();
    let limit = b / 50.0;
    if dx > limit * (1.0 + 1e-12) {
        return Err(Error::ResolutionTooCoarse { dx, limit });
    }
    if !(dx > 0.0) || !(r_max > 0.0) || !r_max.is_finite() {
        return Err(Error::InvalidParams(format!(
            "need dx > 0 and finite r_max > 0, got dx={dx}, r_max={r_max}"
        )));
    }
    let n = (r_max / dx).round() as usize + 1;
    let h = GridFunction::sample(0.0, dx, n, |r| kernel.h(r))?;
    let terms = (r_max / b).ceil() as usize + 1;
    let mut s = h.clone();
    for _ in 1..terms {
        let conv = conv_grid_with(&h, &s, exec)?;
        s = h.add_scaled(&conv, -1.0)?;
    }
    Ok(s)
}

/// Gap law with an exponential tail `g(r) ~ g(r_max) e^{-rho (r - r_max)/a}`
/// beyond the computed window.
#[derive(Debug, Clone)]
pub struct GapLaw {
    params: ProcessParams,
    density: GridFunction,
    cumulative: Vec<f64>,
    tail_rate: f64,
}

impl GapLaw {
    pub fn new(params: ProcessParams, density: GridFunction) -> Result<Self> {
        if density.len() < 2 || density.is_singular() {
            return Err(Error::InvalidParams(
                "gap density needs a regular grid with >= 2 nodes".into(),
            ));
        }
        let cumulative = density.cumulative();
        let tail_rate = tail_constants().rate_for_a(params.a());
        Ok(Self {
            params,
            density,
            cumulative,
            tail_rate,
        })
    }

    pub fn compute(kernel: &dyn PairKernel, dx: f64, r_max: f64) -> Result<Self> {
        Self::new(kernel.params(), gap_density_series(kernel, dx, r_max)?)
    }

    pub fn params(&self) -> ProcessParams {
        self.params
    }

    pub fn grid(&self) -> &GridFunction {
        &self.density
    }

    pub fn tail_rate(&self) -> f64 {
        self.tail_rate
    }

    fn last(&self) -> f64 {
        *self.density.values().last().unwrap()
    }

    pub fn density(&self, r: f64) -> f64 {
        let g = &self.density;
        if r < g.x0() {
            0.0
        } else if g.covers(r) {
            g.eval(r)
        } else {
            self.last() * (-self.tail_rate * (r - g.end())).exp()
        }
    }

    /// `P[gap <= r]`, normalized by [`GapLaw::total_mass`] so that the
    /// survival function decays with the tail instead of the discretization error.
    pub fn cdf(&self, r: f64) -> f64 {
        (self.raw_cdf(r) / self.total_mass()).min(1.0)
    }

    fn raw_cdf(&self, r: f64) -> f64 {
        let g = &self.density;
        if r <= g.x0() {
            return 0.0;
        }
        if !g.covers(r) {
            let base = *self.cumulative.last().unwrap();
            let extra = self.last() / self.tail_rate * (1.0 - (-self.tail_rate * (r - g.end())).exp());
            return base + extra;
        }
        let t = (r - g.x0()) / g.dx();
        let k = (t.floor() as usize).min(g.len() - 2);
        let frac = t - k as f64;
        let (v0, v1) = (g.values()[k], g.values()[k + 1]);
        // exact integral of the linear interpolant over the partial cell
        let partial = g.dx() * frac * (v0 + 0.5 * frac * (v1 - v0));
        self.cumulative[k] + partial
    }

    pub fn survival(&self, r: f64) -> f64 {
        let mass = self.total_mass();
        ((mass - self.raw_cdf(r)) / mass).max(0.0)
    }

    /// Total mass including the exponential tail.
    pub fn total_mass(&self) -> f64 {
        self.cumulative.last().unwrap() + self.last() / self.tail_rate
    }

    /// `int r g(r) dr` including the exponential tail.
    pub fn mean(&self) -> f64 {
        let g = &self.density;
        let v = g.values();
        let dx = g.dx();
        let body: f64 = (0..v.len() - 1)
            .map(|k| {
                let (x0, x1) = (g.node(k), g.node(k + 1));
                0.5 * dx * (x0 * v[k] + x1 * v[k + 1])
            })
            .sum();
        let (end, k) = (g.end(), self.tail_rate);
        body + self.last() * (end / k + 1.0 / (k * k))
    }
}

/// Density of the first point after 0: `c (1 - int_0^t g)`; exactly `c` on `[0, b]`.
pub fn first_point_density(law: &GapLaw, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::DomainError(format!("t = {t} must be >= 0")));
    }
    Ok(law.params().intensity() * law.survival(t))
}

/// Joint density of `(T_0, T_1)`: `c g(t1 - t0)` on `t0 < 0 < t1`.
pub fn joint_t0_t1_density(law: &GapLaw, t0: f64, t1: f64) -> Result<f64> {
    if !(t0 < 0.0) || !(t1 > 0.0) {
        return Err(Error::DomainError(format!("need t0 < 0 < t1, got t0={t0}, t1={t1}")));
    }
    Ok(law.params().intensity() * law.density(t1 - t0))
}

/// Source of `L G_a(theta)` for [`gap_laplace_via_levy`].
#[derive(Debug, Clone, Copy)]
pub enum TailTransform<'a> {
    /// `sqrt(2 pi a) / M(-1/2; 1/2; -theta a)`.
    Closed,
    /// Numeric Laplace transform of a computed tail, exponential completion.
    Numeric(&'a LevyTail),
}

/// `(2 pi)^{-1/2} (2 b^{-1/2} + int_0^b (1 - e^{-theta x}) x^{-3/2} dx)`, i.e.
/// `int (1 - 1_{x<b} e^{-theta x}) nu_a(dx)`.
///
/// Term-by-term integration of the exponential series gives
/// `int_0^b (1 - e^{-theta x}) x^{-3/2} dx = 2 b^{-1/2} (M(-1/2; 1/2; -theta b) - 1)`,
/// so the whole expression is `sqrt(2/(pi b)) M(-1/2; 1/2; -theta b)`.
pub fn levy_gap_denominator(b: f64, theta: f64) -> Result<f64> {
    let m = kummer_m(&KummerParams::levy_denominator(), -theta * b)?;
    Ok((2.0 / (PI * b)).sqrt() * m)
}

/// `E[e^{-theta (T_2 - T_1)}] = 1 - theta L G_a(theta) / D(theta)` with `D`
/// from [`levy_gap_denominator`].
pub fn gap_laplace_via_levy(p: &ProcessParams, theta: f64, source: TailTransform<'_>) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::InvalidParams(format!("theta must be > 0, got {theta}")));
    }
    let lg = match source {
        TailTransform::Closed => laplace_g_closed(p.a(), theta)?,
        TailTransform::Numeric(tail) => {
            if (tail.a() - p.a()).abs() > 1e-12 * p.a() {
                return Err(Error::DomainError(format!(
                    "tail computed for a={}, not a={}",
                    tail.a(),
                    p.a()
                )));
            }
            let model = TailModel::fit_exponential(tail.grid(), tail_constants().rate_for_a(p.a()));
            laplace_numeric(tail.grid(), theta, model)?
        }
    };
    let d = levy_gap_denominator(p.b(), theta)?;
    Ok(1.0 - theta * lg / d)
}

/// Mean gap from the one-sided difference `(1 - E[e^{-theta gap}]) / theta` at small `theta`.
pub fn mean_gap_from_laplace(p: &ProcessParams, step: f64) -> Result<f64> {
    Ok((1.0 - gap_laplace_via_levy(p, step, TailTransform::Closed)?) / step)
}
