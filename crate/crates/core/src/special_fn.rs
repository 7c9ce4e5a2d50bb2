//! Confluent hypergeometric (Kummer) function `M(a; b; x)` for real scalar
//! arguments, the positive zero `rho` of `M(-1/2; 1/2; .)`, and the closed-form
//! Laplace transform of the Levy tail `G_a`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Parameters of one Kummer series `M(a; b; .)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KummerParams {
    pub a_param: f64,
    pub b_param: f64,
    pub tol: f64,
    pub max_terms: usize,
}

impl KummerParams {
    pub const DEFAULT_TOL: f64 = 1e-16;
    pub const DEFAULT_MAX_TERMS: usize = 600;

    pub fn new(a_param: f64, b_param: f64) -> Result<Self> {
        Self::with_tolerance(a_param, b_param, Self::DEFAULT_TOL, Self::DEFAULT_MAX_TERMS)
    }

    pub fn with_tolerance(a_param: f64, b_param: f64, tol: f64, max_terms: usize) -> Result<Self> {
        if !a_param.is_finite() || !b_param.is_finite() {
            return Err(Error::InvalidParams("Kummer parameters must be finite".into()));
        }
        if b_param <= 0.0 && b_param == b_param.round() {
            return Err(Error::InvalidParams(format!("b = {b_param} is a non-positive integer")));
        }
        if !(tol > 0.0) || max_terms == 0 {
            return Err(Error::InvalidParams("tol must be > 0 and max_terms >= 1".into()));
        }
        Ok(Self {
            a_param,
            b_param,
            tol,
            max_terms,
        })
    }

    /// `M(-1/2; 1/2; .)`, the denominator of the Laplace transform of `G_a`.
    pub fn levy_denominator() -> Self {
        Self {
            a_param: -0.5,
            b_param: 0.5,
            tol: Self::DEFAULT_TOL,
            max_terms: Self::DEFAULT_MAX_TERMS,
        }
    }

    /// `M(1/2; 3/2; .)`, minus the derivative of [`KummerParams::levy_denominator`].
    pub fn levy_derivative() -> Self {
        Self {
            a_param: 0.5,
            b_param: 1.5,
            tol: Self::DEFAULT_TOL,
            max_terms: Self::DEFAULT_MAX_TERMS,
        }
    }
}

/// Sums `sum_n (a)_n / (b)_n x^n / n!` with the term recurrence
/// `t_{n+1} = t_n (a + n) / ((b + n)(n + 1)) x`.
///
/// Summation stops once two consecutive terms are both below `tol * |partial|`,
/// or below machine resolution relative to the largest term seen (the sum has
/// cancelled to rounding level, e.g. right at a zero of `M`).
pub fn kummer_m(p: &KummerParams, x: f64) -> Result<f64> {
    if p.b_param <= 0.0 && p.b_param == p.b_param.round() {
        return Err(Error::InvalidParams(format!(
            "b = {} is a non-positive integer",
            p.b_param
        )));
    }
    if !x.is_finite() {
        return Err(Error::InvalidParams(format!("x = {x} is not finite")));
    }
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut largest = 1.0_f64;
    let mut small_run = 0;
    for n in 0..p.max_terms {
        let nf = n as f64;
        term *= (p.a_param + nf) / ((p.b_param + nf) * (nf + 1.0)) * x;
        sum += term;
        largest = largest.max(term.abs());
        let negligible = term.abs() <= p.tol * sum.abs() || term.abs() <= f64::EPSILON * 1e-2 * largest;
        if negligible {
            small_run += 1;
            if small_run == 2 {
                return Ok(sum);
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NonConvergence {
        x,
        max_terms: p.max_terms,
    })
}

/// Bracket used for the root search: `M(-1/2; 1/2; 0) = 1`, `M(-1/2; 1/2; 2) ~ -2.07`.
pub const RHO_BRACKET: (f64, f64) = (0.0, 2.0);

/// Positive zero of `x -> M(-1/2; 1/2; x)` by bisection to bracket width `tol`.
pub fn find_rho(tol: f64) -> Result<f64> {
    find_rho_with(&KummerParams::levy_denominator(), tol)
}

pub fn find_rho_with(p: &KummerParams, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParams("tol must be > 0".into()));
    }
    let (mut lo, mut hi) = RHO_BRACKET;
    let f_lo = kummer_m(p, lo)?;
    let f_hi = kummer_m(p, hi)?;
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::BracketFailure { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if kummer_m(p, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `rho` and `lambda = M(1/2; 3/2; rho)`, which set the exponential decay of `G_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailConstants {
    pub rho: f64,
    pub lambda: f64,
}

impl TailConstants {
    pub fn compute(tol: f64) -> Result<Self> {
        let rho = find_rho(tol)?;
        let lambda = kummer_m(&KummerParams::levy_derivative(), rho)?;
        Ok(Self { rho, lambda })
    }

    /// Amplitude of the conjectured equivalent `G_a(r) ~ A e^{-rho r / a}`.
    pub fn amplitude_for_a(&self, a: f64) -> f64 {
        (2.0 * PI).sqrt() / (self.lambda * a.sqrt())
    }

    pub fn rate_for_a(&self, a: f64) -> f64 {
        self.rho / a
    }
}

/// Tail constants at the default bisection tolerance, computed once.
pub fn tail_constants() -> TailConstants {
    use std::sync::OnceLock;
    static CONSTS: OnceLock<TailConstants> = OnceLock::new();
    *CONSTS.get_or_init(|| TailConstants::compute(1e-13).expect("Kummer root search on fixed bracket"))
}

/// `int_0^inf e^{-theta r} G_a(r) dr = sqrt(2 pi a) / M(-1/2; 1/2; -theta a)`.
///
/// Negative `theta` is the analytic continuation, valid while `-theta a < rho`.
pub fn laplace_g_closed(a: f64, theta: f64) -> Result<f64> {
    if !(a > 0.0) || !theta.is_finite() {
        return Err(Error::InvalidParams(format!(
            "need a > 0 and finite theta, got a={a}, theta={theta}"
        )));
    }
    let arg = -theta * a;
    if arg > 0.0 {
        let rho = tail_constants().rho;
        if arg >= rho {
            return Err(Error::PoleRegion { arg, rho });
        }
    }
    let m = kummer_m(&KummerParams::levy_denominator(), arg)?;
    Ok((2.0 * PI * a).sqrt() / m)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracle: factorial/Pochhammer products formed from scratch
    // for every term, no recurrence shared with the implementation.
    fn naive_m(a: f64, b: f64, x: f64) -> f64 {
        let mut sum = 0.0;
        for n in 0..120 {
            let mut poch_a = 1.0;
            let mut poch_b = 1.0;
            let mut fact = 1.0;
            for k in 0..n {
                poch_a *= a + k as f64;
                poch_b *= b + k as f64;
                fact *= (k + 1) as f64;
            }
            sum += poch_a / poch_b * x.powi(n) / fact;
        }
        sum
    }

    fn m_denom(x: f64) -> f64 {
        kummer_m(&KummerParams::levy_denominator(), x).unwrap()
    }

    fn m_deriv(x: f64) -> f64 {
        kummer_m(&KummerParams::levy_derivative(), x).unwrap()
    }

    #[test]
    fn value_at_zero_is_one() {
        assert_eq!(m_denom(0.0), 1.0);
    }

    #[test]
    fn frozen_series_values() {
        // 1 - sum_{n>=1} 1/((2n-1) n!) summed to machine precision
        assert!((m_denom(1.0) - -0.207_021_663_355_318).abs() < 1e-14);
        assert!((m_deriv(0.85403) - 1.375_297_705_968_653).abs() < 1e-14);
        assert!((m_denom(-1.0) - 1.861_527_706_796_296).abs() < 1e-14);
    }

    #[test]
    fn recurrence_matches_naive_sum() {
        for &(a, b) in &[(-0.5, 0.5), (0.5, 1.5)] {
            let p = KummerParams::new(a, b).unwrap();
            let mut x = -10.0;
            while x <= 2.0 {
                let fast = kummer_m(&p, x).unwrap();
                let slow = naive_m(a, b, x);
                let scale = slow.abs().max(1e-300);
                assert!(
                    ((fast - slow) / scale).abs() < 1e-12,
                    "M({a};{b};{x}): {fast} vs {slow}"
                );
                x += 0.25;
            }
        }
    }

    #[test]
    fn derivative_identity() {
        let rho = find_rho(1e-12).unwrap();
        let h = 1e-5;
        for &x in &[0.2, 0.5, rho] {
            let fd = (m_denom(x + h) - m_denom(x - h)) / (2.0 * h);
            let expected = -m_deriv(x);
            assert!(((fd - expected) / expected).abs() < 1e-6, "x={x}: {fd} vs {expected}");
        }
    }

    #[test]
    fn rho_is_the_positive_zero() {
        let tol = 1e-10;
        let rho = find_rho(tol).unwrap();
        assert!((rho - 0.854_032_656_598_197).abs() < 1e-9);
        assert!(m_denom(rho).abs() < 10.0 * tol);
        assert!(m_denom(0.5) > 0.0);
        assert!(m_denom(1.0) < 0.0);
    }

    #[test]
    fn rho_stable_under_more_terms() {
        let tol = 1e-11;
        let base = find_rho(tol).unwrap();
        let p = KummerParams::with_tolerance(
            -0.5,
            0.5,
            KummerParams::DEFAULT_TOL,
            2 * KummerParams::DEFAULT_MAX_TERMS,
        )
        .unwrap();
        let doubled = find_rho_with(&p, tol).unwrap();
        assert!((base - doubled).abs() <= tol);
    }

    #[test]
    fn tail_constants_are_positive() {
        let c = tail_constants();
        assert!(c.lambda > 1.0);
        assert!((c.lambda - 1.375_299_220_546_284).abs() < 1e-9);
        assert!((c.amplitude_for_a(1.0) - 1.822_605_755_302_719).abs() < 1e-8);
        assert!((c.rate_for_a(2.0) - c.rho / 2.0).abs() < 1e-15);
    }

    #[test]
    fn closed_laplace_values() {
        let s2pi = (2.0 * PI).sqrt();
        assert!((laplace_g_closed(1.0, 0.0).unwrap() - s2pi).abs() < 1e-14);
        assert!((laplace_g_closed(4.0, 0.0).unwrap() - (8.0 * PI).sqrt()).abs() < 1e-14);
        assert!((laplace_g_closed(1.0, 1.0).unwrap() - 1.346_543_629_449_882).abs() < 1e-13);
    }

    #[test]
    fn closed_laplace_pole_region() {
        assert!(laplace_g_closed(1.0, -0.5).is_ok());
        assert!(matches!(laplace_g_closed(1.0, -0.9), Err(Error::PoleRegion { .. })));
        assert!(matches!(laplace_g_closed(2.0, -0.5), Err(Error::PoleRegion { .. })));
    }

    #[test]
    fn rejects_nonpositive_integer_b() {
        assert!(KummerParams::new(0.5, 0.0).is_err());
        assert!(KummerParams::new(0.5, -2.0).is_err());
        assert!(KummerParams::new(0.5, -1.5).is_ok());
    }

    #[test]
    fn terminating_series() {
        // (-2)_n vanishes from n = 3 on: M(-2; 1; x) = 1 - 2x + x^2 / 2
        let p = KummerParams::new(-2.0, 1.0).unwrap();
        let x = 3.0;
        assert!((kummer_m(&p, x).unwrap() - (1.0 - 2.0 * x + x * x / 2.0)).abs() < 1e-14);
    }

    #[test]
    fn reports_non_convergence() {
        let p = KummerParams::with_tolerance(0.5, 1.5, 1e-16, 5).unwrap();
        assert!(matches!(kummer_m(&p, 3.0), Err(Error::NonConvergence { .. })));
    }
}
