//! Numeric Laplace transforms of grid functions.

use serde::{Deserialize, Serialize};

use super::grid::{AbelWeights, GridFunction};
use crate::error::{Error, Result};

/// How the integrand is continued past the right end of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TailModel {
    Truncate,
    /// `amplitude * e^{-rate r}` beyond the grid.
    Exponential {
        rate: f64,
        amplitude: f64,
    },
}

impl TailModel {
    /// Exponential model with the amplitude matched to the last node.
    pub fn fit_exponential(f: &GridFunction, rate: f64) -> Self {
        let end = f.end();
        let last = f.value_at_node(f.len() - 1);
        TailModel::Exponential {
            rate,
            amplitude: last * (rate * end).exp(),
        }
    }
}

/// `phi1(z) = (z - 1 + e^{-z}) / z^2`, `phi2(z) = (1 - (1+z) e^{-z}) / z^2`.
fn exp_hat_moments(z: f64) -> (f64, f64) {
    if z.abs() < 1e-2 {
        let z2 = z * z;
        (
            0.5 - z / 6.0 + z2 / 24.0 - z2 * z / 120.0,
            0.5 - z / 3.0 + z2 / 8.0 - z2 * z / 30.0,
        )
    } else {
        let e = (-z).exp();
        ((z - 1.0 + e) / (z * z), (1.0 - (1.0 + z) * e) / (z * z))
    }
}

/// Sub-cells per grid cell when integrating `x^{-1/2} e^{-theta x}`.
const SINGULAR_SUBDIVISION: usize = 8;

/// `int_{x0}^inf e^{-theta r} f(r) dr`.
///
/// The regular part is piecewise linear and integrated exactly against the
/// exponential; the `C r^{-1/2}` part uses product integration on a subdivided
/// grid with `e^{-theta r}` interpolated linearly; the tail model covers `r`
/// beyond the grid.
pub fn laplace_numeric(f: &GridFunction, theta: f64, tail: TailModel) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::InvalidParams(format!("theta must be > 0, got {theta}")));
    }
    if f.is_empty() {
        return Ok(0.0);
    }
    let dx = f.dx();
    let v = f.values();
    let z = theta * dx;
    let (w_left, w_right) = exp_hat_moments(z);
    let mut total = 0.0;
    for k in 0..v.len().saturating_sub(1) {
        let decay = (-theta * f.node(k)).exp();
        total += decay * dx * (w_left * v[k] + w_right * v[k + 1]);
    }
    if f.is_singular() {
        let cells = (f.len() - 1) * SINGULAR_SUBDIVISION;
        let fine = dx / SINGULAR_SUBDIVISION as f64;
        let weights = AbelWeights::new(cells, fine);
        let phi: Vec<f64> = (0..=cells).map(|j| (-theta * j as f64 * fine).exp()).collect();
        total += f.singular_coeff() * weights.integrate(&phi);
    }
    if let TailModel::Exponential { rate, amplitude } = tail {
        let end = f.end();
        total += amplitude * (-(theta + rate) * end).exp() / (theta + rate);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_function() {
        let z = GridFunction::zeros(0.0, 0.01, 100).unwrap();
        assert_eq!(laplace_numeric(&z, 1.0, TailModel::Truncate).unwrap(), 0.0);
    }

    #[test]
    fn pure_singular_part() {
        // sqrt(2/pi) int_0^inf r^{-1/2} e^{-r} dr = sqrt(2/pi) sqrt(pi) = sqrt(2)
        let c = (2.0 / PI).sqrt();
        let u = GridFunction::with_singular(1.0 / 400.0, vec![0.0; 4001], c).unwrap();
        let got = laplace_numeric(&u, 1.0, TailModel::Truncate).unwrap();
        // truncation at 10 drops c int_10^inf r^{-1/2} e^{-r} ~ 1.1e-5
        let erfc_tail = c * 1.1e-5;
        assert!((got - 2f64.sqrt()).abs() < 2.0 * erfc_tail);
        let exact_window = c * (PI).sqrt() * statrs::function::erf::erf(10f64.sqrt());
        assert!((got - exact_window).abs() < 1e-7, "{got} vs {exact_window}");
    }

    #[test]
    fn regular_exponential_exact() {
        // f = e^{-r} on [0, 20]: L f(theta) = (1 - e^{-(1+theta) 20}) / (1 + theta)
        let f = GridFunction::sample(0.0, 0.05, 401, |r| (-r).exp()).unwrap();
        for &th in &[0.5, 1.0, 3.0] {
            let got = laplace_numeric(&f, th, TailModel::Truncate).unwrap();
            let exact = (1.0 - (-(1.0 + th) * 20.0).exp()) / (1.0 + th);
            assert!((got - exact).abs() / exact < 1e-3);
            let fitted = TailModel::fit_exponential(&f, 1.0);
            let full = laplace_numeric(&f, th, fitted).unwrap();
            assert!((full - 1.0 / (1.0 + th)).abs() / exact < 1e-3);
        }
    }

    #[test]
    fn rejects_nonpositive_theta() {
        let z = GridFunction::zeros(0.0, 0.01, 10).unwrap();
        assert!(laplace_numeric(&z, 0.0, TailModel::Truncate).is_err());
    }
}
