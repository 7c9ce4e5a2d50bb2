//! Uniformly sampled functions with an optional `C r^{-1/2}` part at the
//! origin, and the product-integration convolution used for every `h^{*n}`
//! and `u * h^{*n}` product.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Execution;

/// `f(x) = singular_coeff * x^{-1/2} + R(x)` where `R` is sampled at
/// `x0 + k dx` and linearly interpolated in between. The function is taken to
/// vanish left of `x0`.
///
/// When `singular_coeff != 0` the grid starts at the origin and `values[0]`
/// holds `R(0)`, never an infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
    singular_coeff: f64,
}

/// JSON sidecar written next to a grid CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub x0: f64,
    pub dx: f64,
    pub len: usize,
    pub singular_coeff: f64,
}

impl GridFunction {
    pub fn new(x0: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        Self::build(x0, dx, values, 0.0)
    }

    pub fn with_singular(dx: f64, values: Vec<f64>, singular_coeff: f64) -> Result<Self> {
        Self::build(0.0, dx, values, singular_coeff)
    }

    fn build(x0: f64, dx: f64, values: Vec<f64>, singular_coeff: f64) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() || !x0.is_finite() {
            return Err(Error::InvalidParams(format!("bad grid: x0={x0}, dx={dx}")));
        }
        if !singular_coeff.is_finite() {
            return Err(Error::InvalidParams("singular coefficient must be finite".into()));
        }
        if singular_coeff != 0.0 && x0 != 0.0 {
            return Err(Error::InvalidParams("a singular part requires x0 = 0".into()));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite sample at node {k}")));
        }
        Ok(Self {
            x0,
            dx,
            values,
            singular_coeff,
        })
    }

    /// Samples `f` at `x0 + k dx` for `k < len`.
    pub fn sample(x0: f64, dx: f64, len: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..len).map(|k| f(x0 + k as f64 * dx)).collect();
        Self::new(x0, dx, values)
    }

    pub fn zeros(x0: f64, dx: f64, len: usize) -> Result<Self> {
        Self::new(x0, dx, vec![0.0; len])
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn singular_coeff(&self) -> f64 {
        self.singular_coeff
    }

    pub fn is_singular(&self) -> bool {
        self.singular_coeff != 0.0
    }

    pub fn node(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.dx
    }

    /// Right end of the sampled window.
    pub fn end(&self) -> f64 {
        self.node(self.len().saturating_sub(1))
    }

    pub fn covers(&self, x: f64) -> bool {
        x <= self.end() + 1e-9 * self.dx
    }

    /// Full value `C x^{-1/2} + R(x)` at node `k` (infinite at a singular origin).
    pub fn value_at_node(&self, k: usize) -> f64 {
        let x = self.node(k);
        self.values[k] + self.singular_part(x)
    }

    fn singular_part(&self, x: f64) -> f64 {
        if self.singular_coeff == 0.0 {
            0.0
        } else if x > 0.0 {
            self.singular_coeff / x.sqrt()
        } else {
            f64::INFINITY
        }
    }

    /// Interpolated regular part; zero left of the grid, NaN right of it.
    pub fn regular(&self, x: f64) -> f64 {
        if x < self.x0 || self.values.is_empty() {
            return 0.0;
        }
        let t = (x - self.x0) / self.dx;
        let k = t.floor() as usize;
        if k + 1 >= self.values.len() {
            return if self.covers(x) {
                *self.values.last().unwrap()
            } else {
                f64::NAN
            };
        }
        let w = t - k as f64;
        self.values[k] * (1.0 - w) + self.values[k + 1] * w
    }

    /// Full value at an arbitrary point; zero left of the support.
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.x0 {
            return 0.0;
        }
        self.regular(x) + self.singular_part(x)
    }

    /// `int_{x0}^{end} f`, trapezoid on the regular part and exact on the singular part.
    pub fn integral(&self) -> f64 {
        self.cumulative().last().copied().unwrap_or(0.0)
    }

    /// `F_k = int_{x0}^{x_k} f`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        for k in 0..self.len() {
            if k > 0 {
                acc += 0.5 * self.dx * (self.values[k - 1] + self.values[k]);
            }
            let sing = if self.singular_coeff != 0.0 {
                2.0 * self.singular_coeff * (k as f64 * self.dx).sqrt()
            } else {
                0.0
            };
            out.push(acc + sing);
        }
        out
    }

    /// Same grid, regular values mapped node by node.
    pub fn map_values(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| f(self.node(k), v))
            .collect();
        Self { values, ..self.clone() }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * s).collect(),
            singular_coeff: self.singular_coeff * s,
            ..self.clone()
        }
    }

    /// `self + s * other` on the common window; both grids must coincide.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Result<Self> {
        self.check_same_lattice(other)?;
        let n = self.len().min(other.len());
        let values = (0..n).map(|k| self.values[k] + s * other.values[k]).collect();
        Self::build(self.x0, self.dx, values, self.singular_coeff + s * other.singular_coeff)
    }

    pub fn truncated(&self, len: usize) -> Self {
        let mut out = self.clone();
        out.values.truncate(len);
        out
    }

    fn check_same_lattice(&self, other: &Self) -> Result<()> {
        if !same_step(self.dx, other.dx) {
            return Err(Error::GridMismatch(self.dx, other.dx));
        }
        if (self.x0 - other.x0).abs() > 1e-9 * self.dx {
            return Err(Error::InvalidParams(format!(
                "grid origins differ: {} vs {}",
                self.x0, other.x0
            )));
        }
        Ok(())
    }

    pub fn meta(&self) -> GridMeta {
        GridMeta {
            x0: self.x0,
            dx: self.dx,
            len: self.len(),
            singular_coeff: self.singular_coeff,
        }
    }

    /// Writes `x,value` rows of the regular samples. The singular coefficient
    /// is not representable per row; it goes to the JSON sidecar.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,value")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", fmt_num(self.node(k)), fmt_num(*v))?;
        }
        Ok(())
    }

    /// Writes `<path>` (CSV) and `<path>.json` (sidecar with `singular_coeff`).
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_csv(&mut w)?;
        w.flush()?;
        let side = BufWriter::new(File::create(sidecar_path(path))?);
        serde_json::to_writer_pretty(side, &self.meta())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let meta: GridMeta = serde_json::from_reader(BufReader::new(File::open(sidecar_path(path))?))?;
        let reader = BufReader::new(File::open(path)?);
        let mut values = Vec::with_capacity(meta.len);
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if i == 0 {
                if line.trim() != "x,value" {
                    return Err(Error::InvalidParams(format!("unexpected CSV header {line:?}")));
                }
                continue;
            }
            let v = line
                .split(',')
                .nth(1)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidParams(format!("bad CSV row {}: {line:?}", i + 1)))?;
            values.push(v);
        }
        if values.len() != meta.len {
            return Err(Error::InvalidParams(format!(
                "sidecar says {} rows, CSV has {}",
                meta.len,
                values.len()
            )));
        }
        Self::build(meta.x0, meta.dx, values, meta.singular_coeff)
    }
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

/// Shortest round-tripping decimal representation.
pub fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

fn same_step(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Product-integration weights for `int_0^{n dx} y^{-1/2} phi(y) dy` with `phi`
/// piecewise linear on the grid.
///
/// Cell `j` (`[j dx, (j+1) dx]`) contributes `left[j] phi_j + right[j] phi_{j+1}`.
/// Closed forms with `p = sqrt(j)`, `q = sqrt(j+1)`:
/// `left = (2/3) sqrt(dx) (q-p)^2 (2q+p)`, `right = (2/3) sqrt(dx) (q-p)^2 (q+2p)`.
#[derive(Debug, Clone)]
pub struct AbelWeights {
    left: Vec<f64>,
    right: Vec<f64>,
}

impl AbelWeights {
    pub fn new(cells: usize, dx: f64) -> Self {
        let s = dx.sqrt();
        let mut left = Vec::with_capacity(cells);
        let mut right = Vec::with_capacity(cells);
        for j in 0..cells {
            let p = (j as f64).sqrt();
            let q = ((j + 1) as f64).sqrt();
            let d = 1.0 / (q + p);
            let d2 = d * d;
            left.push(2.0 / 3.0 * s * d2 * (2.0 * q + p));
            right.push(2.0 / 3.0 * s * d2 * (q + 2.0 * p));
        }
        Self { left, right }
    }

    pub fn cells(&self) -> usize {
        self.left.len()
    }

    pub fn left(&self, j: usize) -> f64 {
        self.left[j]
    }

    pub fn right(&self, j: usize) -> f64 {
        self.right[j]
    }

    /// Node weights `W_j` such that the integral over `[0, n dx]` equals
    /// `sum_{j<n} interior[j] phi_j + right(n-1) phi_n`.
    pub fn interior(&self) -> Vec<f64> {
        (0..self.cells())
            .map(|j| self.left[j] + if j > 0 { self.right[j - 1] } else { 0.0 })
            .collect()
    }

    /// `int_0^{n dx} y^{-1/2} phi(y) dy` for node values `phi[0..=n]`.
    pub fn integrate(&self, phi: &[f64]) -> f64 {
        let n = phi.len().saturating_sub(1);
        (0..n).map(|j| self.left[j] * phi[j] + self.right[j] * phi[j + 1]).sum()
    }
}

/// `(f * g)(x) = int f(y) g(x - y) dy` on the grid.
///
/// Regular parts are combined with the trapezoid rule. A `C y^{-1/2}` part on
/// either operand is integrated exactly against the piecewise-linear
/// interpolant of the other operand. The result starts at `f.x0 + g.x0` and is
/// valid over the shorter of the two windows.
pub fn conv_grid(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    conv_grid_with(f, g, Execution::default())
}

pub fn conv_grid_with(f: &GridFunction, g: &GridFunction, exec: Execution) -> Result<GridFunction> {
    if !same_step(f.dx, g.dx) {
        return Err(Error::GridMismatch(f.dx, g.dx));
    }
    if f.is_singular() && g.is_singular() {
        return Err(Error::DoubleSingularity);
    }
    let (sing, reg) = if g.is_singular() { (g, f) } else { (f, g) };
    let n = f.len().min(g.len());
    let dx = f.dx;
    let fv = &sing.values[..n];
    let gv = &reg.values[..n];

    let (weights, last) = if sing.is_singular() {
        let w = AbelWeights::new(n.max(1), dx);
        let last: Vec<f64> = (0..n.max(1)).map(|j| w.right(j)).collect();
        (w.interior(), last)
    } else {
        (Vec::new(), Vec::new())
    };
    let c = sing.singular_coeff;

    let mut out = vec![0.0; n];
    exec.fill(&mut out, |m| {
        // trapezoid on the regular parts
        let mut acc: f64 = fv[..=m].iter().zip(gv[..=m].iter().rev()).map(|(a, b)| a * b).sum();
        acc -= 0.5 * (fv[0] * gv[m] + fv[m] * gv[0]);
        let mut total = acc * dx;
        if c != 0.0 && m > 0 {
            let s: f64 = weights[..m]
                .iter()
                .zip(gv[1..=m].iter().rev())
                .map(|(w, b)| w * b)
                .sum();
            total += c * (s + last[m - 1] * gv[0]);
        }
        total
    });
    GridFunction::new(f.x0 + g.x0, dx, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn abel_weights_integrate_monomials_exactly() {
        let dx = 0.01;
        let w = AbelWeights::new(300, dx);
        let n = 300;
        let ones = vec![1.0; n + 1];
        let lin: Vec<f64> = (0..=n).map(|k| k as f64 * dx).collect();
        let x = n as f64 * dx;
        assert!((w.integrate(&ones) - 2.0 * x.sqrt()).abs() < 1e-13);
        assert!((w.integrate(&lin) - 2.0 / 3.0 * x.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn box_convolution_is_triangle() {
        let dx = 1e-3;
        let n = 2001;
        let boxf = GridFunction::sample(0.0, dx, n, |x| if x <= 1.0 + 1e-12 { 1.0 } else { 0.0 }).unwrap();
        let tri = conv_grid(&boxf, &boxf).unwrap();
        assert!((tri.eval(1.0) - 1.0).abs() < 2e-3);
        assert!((tri.eval(0.5) - 0.5).abs() < 2e-3);
        assert!((tri.eval(1.5) - 0.5).abs() < 2e-3);
    }

    #[test]
    fn zero_operand_gives_zero() {
        let dx = 0.01;
        let z = GridFunction::zeros(0.0, dx, 200).unwrap();
        let u = GridFunction::with_singular(dx, vec![0.0; 200], (2.0 / PI).sqrt()).unwrap();
        let out = conv_grid(&u, &z).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn support_starts_add_up() {
        let dx = 0.01;
        let f = GridFunction::sample(0.5, dx, 100, |_| 1.0).unwrap();
        let g = GridFunction::sample(0.25, dx, 100, |_| 1.0).unwrap();
        let out = conv_grid(&f, &g).unwrap();
        assert!((out.x0() - 0.75).abs() < 1e-15);
        // both ones on windows starting at their x0: (f*g)(0.75 + t) = t
        assert!((out.eval(0.75 + 0.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn singular_against_constant() {
        // int_0^x y^{-1/2} dy = 2 sqrt(x)
        let dx = 0.01;
        let u = GridFunction::with_singular(dx, vec![0.0; 101], 1.0).unwrap();
        let one = GridFunction::sample(0.0, dx, 101, |_| 1.0).unwrap();
        let out = conv_grid(&one, &u).unwrap();
        for k in [1usize, 10, 100] {
            let x = k as f64 * dx;
            assert!((out.values()[k] - 2.0 * x.sqrt()).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_mismatch_and_double_singular() {
        let a = GridFunction::with_singular(0.01, vec![0.0; 10], 1.0).unwrap();
        let b = GridFunction::with_singular(0.01, vec![0.0; 10], 2.0).unwrap();
        let c = GridFunction::zeros(0.0, 0.02, 10).unwrap();
        assert!(matches!(conv_grid(&a, &b), Err(Error::DoubleSingularity)));
        assert!(matches!(conv_grid(&a, &c), Err(Error::GridMismatch(..))));
    }

    #[test]
    fn invariants_enforced() {
        assert!(GridFunction::new(0.0, 0.0, vec![1.0]).is_err());
        assert!(GridFunction::new(0.0, 0.1, vec![f64::INFINITY]).is_err());
        assert!(GridFunction::build(1.0, 0.1, vec![0.0], 1.0).is_err());
    }

    #[test]
    fn csv_and_sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.csv");
        let f = GridFunction::with_singular(0.125, vec![0.0, -0.1, 0.3, 1.0 / 3.0], 0.797).unwrap();
        f.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,value\n0.0,0.0\n"));
        let back = GridFunction::load(&path).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn strategies_give_identical_convolutions() {
        let dx = 0.01;
        let f = GridFunction::sample(0.0, dx, 500, |x| (x * 3.0).sin()).unwrap();
        let u = GridFunction::with_singular(dx, (0..500).map(|k| k as f64 * 1e-3).collect(), 0.7).unwrap();
        let a = conv_grid_with(&f, &u, Execution::Sequential).unwrap();
        let b = conv_grid_with(&f, &u, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
