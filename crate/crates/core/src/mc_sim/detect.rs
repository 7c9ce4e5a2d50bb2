//! Grid detection of `M_{a,b}` and of the regenerative set `R_a`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::path::{check_resolution, BrownianPath};
use crate::error::{Error, Result};
use crate::grid_calc::ProcessParams;

/// `out[j] = max(values[j+1-w ..= j])`, the window clipped at index 0.
/// Monotone deque, `O(n)` overall.
pub fn trailing_max(values: &[f64], w: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut deque: VecDeque<usize> = VecDeque::new();
    for (j, &v) in values.iter().enumerate() {
        while deque.back().is_some_and(|&k| values[k] <= v) {
            deque.pop_back();
        }
        deque.push_back(j);
        while deque.front().is_some_and(|&k| k + w <= j) {
            deque.pop_front();
        }
        out.push(values[deque[0]]);
    }
    out
}

/// Grid steps in a reach: nodes of `[t - reach, t]` other than `t`.
pub fn reach_steps(reach: f64, dt: f64) -> usize {
    (reach / dt + 1e-9).floor() as usize
}

/// Detected points of one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    pub times: Vec<f64>,
    /// First and last candidate times, whose windows fit in the path.
    pub valid_window: (f64, f64),
    pub dt: f64,
    /// Candidates whose value equals a window maximum (resolved to the earliest index).
    pub ties: usize,
}

impl PointSample {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Candidate nodes times `dt`: the measure the counts refer to.
    pub fn valid_measure(&self) -> f64 {
        let (lo, hi) = self.valid_window;
        ((hi - lo) / self.dt).round() * self.dt + self.dt
    }
}

/// Nodes `t` with `B_t > B_s` for the `left` steps before and `B_t >= B_s`
/// for the `right` steps after: the strict window maximum, ties going to the
/// earliest index. Reaches need not be ordered.
pub fn detect_window_maxima(path: &BrownianPath, left: f64, right: f64) -> Result<PointSample> {
    let dt = path.dt();
    check_resolution(dt, left.min(right))?;
    let (nl, nr) = (reach_steps(left, dt), reach_steps(right, dt));
    let v = path.values();
    let n = v.len();
    if nl + nr >= n {
        return Err(Error::InvalidParams(format!(
            "path of {n} nodes is shorter than the window"
        )));
    }
    let before = trailing_max(v, nl);
    let after = trailing_max(v, nr);
    let mut times = Vec::new();
    let mut ties = 0;
    for i in nl..n - nr {
        let (lmax, rmax) = (before[i - 1], after[i + nr]);
        if v[i] == lmax || v[i] == rmax {
            ties += 1;
        }
        if v[i] > lmax && v[i] >= rmax {
            times.push(path.time(i));
        }
    }
    Ok(PointSample {
        times,
        valid_window: (path.time(nl), path.time(n - 1 - nr)),
        dt,
        ties,
    })
}

/// `M_{a,b}` on the grid.
pub fn detect_m_ab(path: &BrownianPath, p: &ProcessParams) -> Result<PointSample> {
    detect_window_maxima(path, p.a(), p.b())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

/// Maximal runs of `R_a` on `t >= 0`, with the horizon they were observed on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegenerativeSample {
    pub runs: Vec<Interval>,
    pub dt: f64,
    pub horizon: f64,
}

impl RegenerativeSample {
    /// Complete gaps `(end of run, start of next run)` whose left end is `>= from`.
    pub fn gaps_from(&self, from: f64) -> impl Iterator<Item = Interval> + '_ {
        self.runs
            .windows(2)
            .map(|w| Interval {
                start: w[0].end,
                end: w[1].start,
            })
            .filter(move |g| g.start >= from - 0.5 * self.dt)
    }

    /// Ends of runs followed by more than `floor(b/dt)` nodes outside `R_a`,
    /// restricted to `t >= from`; the last run counts when the path extends far enough.
    pub fn long_gap_starts(&self, b: f64, from: f64) -> Vec<f64> {
        let nb = reach_steps(b, self.dt) as i64;
        let steps = |x: f64| (x / self.dt).round() as i64;
        let last = steps(self.horizon);
        let mut out = Vec::new();
        for (k, run) in self.runs.iter().enumerate() {
            if run.end < from - 0.5 * self.dt {
                continue;
            }
            let e = steps(run.end);
            let long = match self.runs.get(k + 1) {
                Some(next) => steps(next.start) - e > nb,
                None => e + nb <= last,
            };
            if long {
                out.push(run.end);
            }
        }
        out
    }
}

/// `R_a = {t >= 0 : B_t > B_s for grid s in [(t-a)^+, t)}` as maximal runs of
/// consecutive nodes. Strict records, matching the tie rule of
/// [`detect_window_maxima`], so long gaps start exactly at `M_{a,b}` points.
pub fn detect_r_a(path: &BrownianPath, a: f64) -> Result<RegenerativeSample> {
    let dt = path.dt();
    check_resolution(dt, a)?;
    let na = reach_steps(a, dt);
    let v = &path.values()[path.origin()..];
    let before = trailing_max(v, na);
    let mut runs: Vec<Interval> = Vec::new();
    let mut open: Option<usize> = None;
    for k in 0..v.len() {
        let member = k == 0 || v[k] > before[k - 1];
        match (member, open) {
            (true, None) => open = Some(k),
            (false, Some(s)) => {
                runs.push(Interval {
                    start: s as f64 * dt,
                    end: (k - 1) as f64 * dt,
                });
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        runs.push(Interval {
            start: s as f64 * dt,
            end: (v.len() - 1) as f64 * dt,
        });
    }
    Ok(RegenerativeSample {
        runs,
        dt,
        horizon: (v.len() - 1) as f64 * dt,
    })
}

/// Points of `points` and `starts` within `[from, to]` without a partner
/// within one grid step in the other list. Both lists must be sorted.
pub fn correspondence_mismatches(points: &[f64], starts: &[f64], from: f64, to: f64, dt: f64) -> usize {
    let clip = |xs: &[f64]| -> Vec<f64> {
        xs.iter()
            .copied()
            .filter(|&t| t >= from - 0.5 * dt && t <= to + 0.5 * dt)
            .collect()
    };
    let (x, y) = (clip(points), clip(starts));
    let unmatched = |xs: &[f64], ys: &[f64]| {
        xs.iter()
            .filter(|&&t| {
                let k = ys.partition_point(|&s| s < t - 1.5 * dt);
                ys.get(k).is_none_or(|&s| s > t + 1.5 * dt)
            })
            .count()
    };
    unmatched(&x, &y) + unmatched(&y, &x)
}
