//! The pair kernel `h_{a,b}`, the correlation functions built from it, and the
//! double-Laplace functional of `(G, D)` on a fixed interval.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reach thresholds `a >= b > 0` of the point process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    a: f64,
    b: f64,
}

impl ProcessParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(b > 0.0) || !(a >= b) || !a.is_finite() {
            return Err(Error::InvalidParams(format!("need a >= b > 0, got a={a}, b={b}")));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `1 / (pi sqrt(ab))`: the intensity, and the plateau of `h` beyond `a + b`.
    pub fn intensity(&self) -> f64 {
        1.0 / (PI * (self.a * self.b).sqrt())
    }

    /// Mean spacing `pi sqrt(ab)`.
    pub fn mean_gap(&self) -> f64 {
        PI * (self.a * self.b).sqrt()
    }
}

/// A pair kernel `h` feeding the correlation functions. [`ProcessParams`] is
/// the real one; other implementations exist for negative controls.
pub trait PairKernel: Sync {
    fn params(&self) -> ProcessParams;
    fn h(&self, r: f64) -> f64;
}

impl PairKernel for ProcessParams {
    fn params(&self) -> ProcessParams {
        *self
    }

    fn h(&self, r: f64) -> f64 {
        eval_h(self, r)
    }
}

/// `h_{a,b}(r)`:
/// `0` for `r <= b`,
/// `sqrt((r-b)/b) / (pi r)` on `[b, a]`,
/// `(sqrt((r-b)/b) + sqrt((r-a)/a)) / (pi r)` on `[a, a+b]`,
/// `1 / (pi sqrt(ab))` for `r >= a + b`.
pub fn eval_h(p: &ProcessParams, r: f64) -> f64 {
    let (a, b) = (p.a, p.b);
    if r <= b {
        0.0
    } else if r <= a {
        ((r - b) / b).sqrt() / (PI * r)
    } else if r <= a + b {
        (((r - b) / b).sqrt() + ((r - a) / a).sqrt()) / (PI * r)
    } else {
        p.intensity()
    }
}

/// Degenerate kernel `h_{inf,a}(r) = 1_{r > a} sqrt((r-a)/a) / (pi r)`.
pub fn eval_h_infinity(a: f64, r: f64) -> f64 {
    if r <= a {
        0.0
    } else {
        ((r - a) / a).sqrt() / (PI * r)
    }
}

/// `n`-point correlation function for sorted times:
/// `c * prod_k h(t_{k+1} - t_k)` with `c` the intensity.
pub fn correlation_fn(kernel: &dyn PairKernel, times: &[f64]) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::InvalidParams("need at least one time".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams("times must be sorted".into()));
    }
    let c = kernel.params().intensity();
    Ok(times.windows(2).fold(c, |acc, w| acc * kernel.h(w[1] - w[0])))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HMaxRegime {
    pub repulsive: bool,
    pub argmax: f64,
    pub maxval: f64,
}

/// Scans `h` on `(b, a+b]` and compares with the plateau `1/(pi sqrt(ab))`.
/// Repulsive means `h` never exceeds the plateau (ties allowed, which is the
/// boundary case `a = 4b`); otherwise the interior maximum sits at `2b`.
pub fn check_h_max_regime(p: &ProcessParams) -> HMaxRegime {
    let plateau = p.intensity();
    let steps = 20_000;
    let (lo, hi) = (p.b, p.a + p.b);
    let mut argmax = hi;
    let mut maxval = f64::NEG_INFINITY;
    // include the analytic candidate 2b exactly; the grid alone could miss it
    let candidates = (1..=steps)
        .map(|k| lo + (hi - lo) * k as f64 / steps as f64)
        .chain(std::iter::once(2.0 * p.b).filter(|&r| r > lo && r <= hi));
    for r in candidates {
        let v = eval_h(p, r);
        if v > maxval {
            maxval = v;
            argmax = r;
        }
    }
    let tol = 1e-12 * plateau;
    if maxval <= plateau + tol {
        HMaxRegime {
            repulsive: true,
            argmax: f64::INFINITY,
            maxval: plateau,
        }
    } else {
        HMaxRegime {
            repulsive: false,
            argmax,
            maxval,
        }
    }
}

/// `E[exp(-(alpha G^2 + beta D^2)/2)] = (alpha/sqrt(1+alpha) + beta/sqrt(1+beta)) / (alpha + beta + alpha beta)`
/// for the left/right drops `G`, `D` of the maximum of Brownian motion on a
/// unit interval. Equals 1 at the origin by continuity.
pub fn corollary_laplace(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha >= 0.0) || !(beta >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "need alpha, beta >= 0, got {alpha}, {beta}"
        )));
    }
    let denom = alpha + beta + alpha * beta;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((alpha / (1.0 + alpha).sqrt() + beta / (1.0 + beta).sqrt()) / denom)
}
