//! Argmax and drops of Brownian motion on a fixed interval: sampler, density,
//! and a binned goodness-of-fit test between the two.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// `(rho, G, D)`: argmax on `[s, t]` and drops from the maximum to both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub rho: f64,
    pub g: f64,
    pub d: f64,
}

/// `Theta ~ U[0, pi/2]`, `X, Y ~ Exp(1)`:
/// `(s cos^2 + t sin^2, sqrt(2X (t-s)) sin, sqrt(2Y (t-s)) cos)`.
pub fn sample_triplet<R: Rng + ?Sized>(s: f64, t: f64, rng: &mut R) -> Result<Triplet> {
    if !(s < t) {
        return Err(Error::InvalidParams(format!("need s < t, got s={s}, t={t}")));
    }
    let theta = rng.random::<f64>() * FRAC_PI_2;
    let x: f64 = Exp1.sample(rng);
    let y: f64 = Exp1.sample(rng);
    let (sin, cos) = theta.sin_cos();
    let len = t - s;
    Ok(Triplet {
        rho: s * cos * cos + t * sin * sin,
        g: (2.0 * x * len).sqrt() * sin,
        d: (2.0 * y * len).sqrt() * cos,
    })
}

/// Density of `(rho(0,t), G, D)` at `(r, g, d)`. With `S_t = g` and
/// `B_t = g - d`:
/// `g d / (pi r^{3/2} (t-r)^{3/2}) exp(-g^2 / (2r)) exp(-d^2 / (2(t-r)))`.
pub fn triplet_density(t: f64, r: f64, g_val: f64, d_val: f64) -> f64 {
    let (a, b) = (g_val, g_val - d_val);
    if !(0.0 < r && r < t) || !(a > 0.0 && a > b) {
        return 0.0;
    }
    let drop = a - b;
    a * drop / (PI * r.powf(1.5) * (t - r).powf(1.5))
        * (-a * a / (2.0 * r)).exp()
        * (-drop * drop / (2.0 * (t - r))).exp()
}

/// Five-point Gauss-Legendre rule on `[-1, 1]`.
const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// `int_lo^hi f` by Gauss-Legendre on `panels` equal panels.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let h = (hi - lo) / panels as f64;
    (0..panels)
        .map(|k| {
            let mid = lo + (k as f64 + 0.5) * h;
            GL_NODES
                .iter()
                .zip(&GL_WEIGHTS)
                .map(|(x, w)| w * f(mid + 0.5 * h * x))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub samples: usize,
    pub cells: usize,
}

/// Per-axis bins for the test: rho through `phi = asin(sqrt(rho / t))` in equal
/// angles, `G / sqrt(rho)` and `D / sqrt(t - rho)` at Rayleigh deciles. Under
/// the law all cells have mass `1 / bins^3`, yet the expected counts below are
/// integrated from [`triplet_density`] directly.
pub struct TripletBinning {
    pub bins: usize,
    pub t: f64,
    /// Finite integration cap for the last Rayleigh bin.
    pub cap: f64,
}

impl TripletBinning {
    pub fn new(bins: usize, t: f64) -> Result<Self> {
        if bins < 2 || !(t > 0.0) {
            return Err(Error::InvalidParams(format!(
                "need bins >= 2 and t > 0, got {bins}, {t}"
            )));
        }
        Ok(Self { bins, t, cap: 9.0 })
    }

    fn rayleigh_edge(&self, k: usize) -> f64 {
        if k == self.bins {
            self.cap
        } else {
            (-2.0 * (1.0 - k as f64 / self.bins as f64).ln()).sqrt()
        }
    }

    fn bin_of(&self, edges: impl Fn(usize) -> f64, v: f64) -> usize {
        (1..self.bins).take_while(|&k| v >= edges(k)).count()
    }

    pub fn cell_of(&self, tr: &Triplet) -> (usize, usize, usize) {
        let u = (tr.rho / self.t).clamp(0.0, 1.0);
        let phi = u.sqrt().asin();
        let i = ((phi / FRAC_PI_2 * self.bins as f64) as usize).min(self.bins - 1);
        let x = tr.g / (self.t * u).sqrt();
        let y = tr.d / (self.t * (1.0 - u)).sqrt();
        (
            i,
            self.bin_of(|k| self.rayleigh_edge(k), x),
            self.bin_of(|k| self.rayleigh_edge(k), y),
        )
    }

    /// Cell probability from the density in `(phi, x, y)` coordinates:
    /// `r = t sin^2 phi`, `g = x sqrt(r)`, `d = y sqrt(t - r)`, Jacobian `2 r (t - r)`.
    pub fn cell_mass(&self, i: usize, j: usize, k: usize) -> f64 {
        let t = self.t;
        let phi = |m: usize| m as f64 * FRAC_PI_2 / self.bins as f64;
        let (x0, x1) = (self.rayleigh_edge(j), self.rayleigh_edge(j + 1));
        let (y0, y1) = (self.rayleigh_edge(k), self.rayleigh_edge(k + 1));
        gauss_legendre(
            |ph| {
                let r = t * ph.sin().powi(2);
                let jac_phi = 2.0 * (r * (t - r)).sqrt();
                gauss_legendre(
                    |x| {
                        gauss_legendre(
                            |y| {
                                let (g, d) = (x * r.sqrt(), y * (t - r).sqrt());
                                triplet_density(t, r, g, d) * jac_phi * r.sqrt() * (t - r).sqrt()
                            },
                            y0,
                            y1,
                            4,
                        )
                    },
                    x0,
                    x1,
                    4,
                )
            },
            phi(i),
            phi(i + 1),
            2,
        )
    }
}

/// Pearson chi-square of `draws` against cell masses from [`triplet_density`].
pub fn triplet_chi_square(draws: &[Triplet], binning: &TripletBinning) -> Result<ChiSquareTest> {
    let b = binning.bins;
    let cells = b * b * b;
    if draws.len() < 5 * cells {
        return Err(Error::InsufficientData(format!(
            "{} draws for {cells} cells",
            draws.len()
        )));
    }
    let mut counts = vec![0usize; cells];
    for tr in draws {
        let (i, j, k) = binning.cell_of(tr);
        counts[(i * b + j) * b + k] += 1;
    }
    let n = draws.len() as f64;
    let mut statistic = 0.0;
    for i in 0..b {
        for j in 0..b {
            for k in 0..b {
                let expected = n * binning.cell_mass(i, j, k);
                let o = counts[(i * b + j) * b + k] as f64;
                statistic += (o - expected).powi(2) / expected;
            }
        }
    }
    let dof = cells - 1;
    let chi = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidParams(e.to_string()))?;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: chi.sf(statistic),
        samples: draws.len(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc_sim::path::path_rng;

    #[test]
    fn sampler_ranges() {
        let mut rng = path_rng(1, 0);
        for _ in 0..1000 {
            let tr = sample_triplet(-1.0, 2.0, &mut rng).unwrap();
            assert!((-1.0..=2.0).contains(&tr.rho));
            assert!(tr.g >= 0.0 && tr.d >= 0.0);
        }
        assert!(sample_triplet(1.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn arcsine_median_and_drops_laplace() {
        let mut rng = path_rng(2, 0);
        let n = 100_000;
        let draws: Vec<Triplet> = (0..n).map(|_| sample_triplet(0.0, 1.0, &mut rng).unwrap()).collect();
        let below = draws.iter().filter(|t| t.rho <= 0.5).count() as f64 / n as f64;
        assert!((below - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
        let vals: Vec<f64> = draws.iter().map(|t| (-(t.g * t.g + t.d * t.d) / 2.0).exp()).collect();
        let m = vals.iter().sum::<f64>() / n as f64;
        let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((m - 2f64.sqrt() / 3.0).abs() < 3.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn density_domain() {
        assert_eq!(triplet_density(1.0, 0.0, 1.0, 1.0), 0.0);
        assert_eq!(triplet_density(1.0, 1.0, 1.0, 1.0), 0.0);
        assert_eq!(triplet_density(1.0, 0.5, 0.0, 1.0), 0.0);
        assert_eq!(triplet_density(1.0, 0.5, 1.0, 0.0), 0.0);
        assert!(triplet_density(1.0, 0.5, 1.0, 1.0) > 0.0);
    }

    // r-marginal by quadrature in (g, d), truncated where the Gaussian factors vanish
    fn r_marginal(t: f64, r: f64) -> f64 {
        gauss_legendre(
            |g| gauss_legendre(|d| triplet_density(t, r, g, d), 0.0, 12.0 * (t - r).sqrt(), 40),
            0.0,
            12.0 * r.sqrt(),
            40,
        )
    }

    #[test]
    fn r_marginal_is_arcsine() {
        for &r in &[0.05f64, 0.3, 0.5, 0.9] {
            let arcsine = 1.0 / (PI * (r * (1.0 - r)).sqrt());
            assert!((r_marginal(1.0, r) - arcsine).abs() < 1e-8 * arcsine, "r={r}");
        }
    }

    #[test]
    fn density_integrates_to_one() {
        // rho = sin^2(phi) removes the endpoint singularities of the arcsine marginal
        let total = gauss_legendre(
            |phi| {
                let r = phi.sin().powi(2);
                r_marginal(1.0, r) * 2.0 * (r * (1.0 - r)).sqrt()
            },
            0.0,
            FRAC_PI_2,
            20,
        );
        assert!((total - 1.0).abs() < 1e-2, "{total}");
    }

    #[test]
    fn cells_are_equiprobable() {
        let b = TripletBinning::new(4, 2.0).unwrap();
        let mut sum = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    let m = b.cell_mass(i, j, k);
                    assert!((m - 1.0 / 64.0).abs() < 1e-6, "{i}{j}{k}: {m}");
                    sum += m;
                }
            }
        }
        assert!((sum - 1.0).abs() < 1e-6);
    }

    #[test]
    fn chi_square_accepts_the_sampler() {
        let mut rng = path_rng(3, 0);
        let draws: Vec<Triplet> = (0..20_000)
            .map(|_| sample_triplet(0.0, 1.0, &mut rng).unwrap())
            .collect();
        let b = TripletBinning::new(5, 1.0).unwrap();
        let test = triplet_chi_square(&draws, &b).unwrap();
        assert_eq!(test.dof, 124);
        assert!(test.p_value > 0.001, "{test:?}");
        // a shifted sampler is rejected
        let skewed: Vec<Triplet> = draws.iter().map(|t| Triplet { g: 1.1 * t.g, ..*t }).collect();
        assert!(triplet_chi_square(&skewed, &b).unwrap().p_value < 1e-6);
        assert!(triplet_chi_square(&draws[..100], &b).is_err());
    }
}
