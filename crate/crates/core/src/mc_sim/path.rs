//! Two-sided Brownian paths on a regular grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_calc::ProcessParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub dt: f64,
    /// One-sided length `T`; paths cover `[-T, T]`.
    pub horizon: f64,
    pub seed: u64,
    pub n_paths: usize,
}

impl PathConfig {
    pub fn new(dt: f64, horizon: f64, seed: u64, n_paths: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParams(format!("dt must be > 0, got {dt}")));
        }
        if !(horizon > dt) || !horizon.is_finite() {
            return Err(Error::InvalidParams(format!("horizon must exceed dt, got {horizon}")));
        }
        if n_paths == 0 {
            return Err(Error::InvalidParams("n_paths must be positive".into()));
        }
        Ok(Self {
            dt,
            horizon,
            seed,
            n_paths,
        })
    }

    /// Checks the per-process constraints `dt <= b/200` and `T >= 10 (a+b)`.
    pub fn validate_for(&self, p: &ProcessParams) -> Result<()> {
        check_resolution(self.dt, p.b())?;
        let min_horizon = 10.0 * (p.a() + p.b());
        if self.horizon < min_horizon {
            return Err(Error::InvalidParams(format!(
                "horizon {} is below 10 (a+b) = {min_horizon}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Steps on each side of 0.
    pub fn half_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Same seed and horizon with the step divided by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            dt: self.dt / factor as f64,
            ..*self
        }
    }
}

/// Grid steps needed per reach length.
pub const STEPS_PER_REACH: f64 = 200.0;

pub(crate) fn check_resolution(dt: f64, reach: f64) -> Result<()> {
    let limit = reach / STEPS_PER_REACH;
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::ResolutionTooCoarse { dx: dt, limit });
    }
    Ok(())
}

/// Path values on `[-T, T]`; index `origin` is `t = 0` where the value is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    dt: f64,
    origin: usize,
    values: Vec<f64>,
}

impl BrownianPath {
    /// Wraps explicit values; `values[origin]` must be 0 and `origin` central.
    pub fn from_values(dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParams(format!("dt must be > 0, got {dt}")));
        }
        if values.len().is_multiple_of(2) {
            return Err(Error::InvalidParams(
                "a two-sided path has an odd number of nodes".into(),
            ));
        }
        let origin = values.len() / 2;
        if values[origin] != 0.0 {
            return Err(Error::InvalidParams("path must vanish at t = 0".into()));
        }
        Ok(Self { dt, origin, values })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, index: usize) -> f64 {
        (index as f64 - self.origin as f64) * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.origin as f64 * self.dt
    }

    pub fn at_zero(&self) -> f64 {
        self.values[self.origin]
    }

    /// Every `factor`-th node, which is again a Brownian path with step `factor * dt`.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.origin.is_multiple_of(factor) {
            return Err(Error::InvalidParams(format!(
                "factor {factor} must divide the half length {}",
                self.origin
            )));
        }
        let values = self.values.iter().step_by(factor).copied().collect();
        Self::from_values(self.dt * factor as f64, values)
    }

    /// `t -> B(-t)`.
    pub fn time_reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { values, ..*self }
    }

    /// `B + c`; breaks the zero-at-origin convention on purpose.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + c).collect(),
            ..*self
        }
    }
}

/// Generator for path `path_index`: ChaCha8 keyed by the seed, stream = index.
pub fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// Independent `N(0, dt)` random walks to the right and to the left of 0.
pub fn gen_brownian(cfg: &PathConfig, path_index: u64) -> BrownianPath {
    let n = cfg.half_steps();
    let sd = cfg.dt.sqrt();
    let mut rng = path_rng(cfg.seed, path_index);
    let mut values = vec![0.0; 2 * n + 1];
    let mut acc = 0.0;
    for v in values[n + 1..].iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        acc += sd * z;
        *v = acc;
    }
    acc = 0.0;
    for v in values[..n].iter_mut().rev() {
        let z: f64 = rng.sample(StandardNormal);
        acc += sd * z;
        *v = acc;
    }
    BrownianPath {
        dt: cfg.dt,
        origin: n,
        values,
    }
}
