//! Argument schedules: the interval endpoints `θ_i`, the anchors `ζ_i` and the
//! piecewise constant deviating argument `β(t)`.
//!
//! A schedule covers a finite index window. Interval `i` is `[θ_i, θ_{i+1})`
//! and carries the anchor `ζ_i ∈ [θ_i, θ_{i+1}]`; `β(t) = ζ_i` on it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Immutable schedule over the theta index window `[i_min, i_max]`.
///
/// `thetas[j]` is `θ_{i_min + j}`; `zetas[j]` is the anchor of interval
/// `i_min + j`, so there is one anchor fewer than endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgumentSchedule {
    i_min: i64,
    thetas: Vec<f64>,
    zetas: Vec<f64>,
    theta_bound: f64,
}

/// Serializable description of how to build a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    /// `θ_i = ζ_i = i`, the greatest-integer argument.
    Epca { i_min: i64, i_max: i64 },
    /// `θ_i = 2i - 1`, `ζ_i = 2i`: alternately advanced and retarded.
    Alternating { i_min: i64, i_max: i64 },
    Explicit {
        i_min: i64,
        thetas: Vec<f64>,
        zetas: Vec<f64>,
        #[serde(default)]
        theta_bound: Option<f64>,
    },
    /// Gaps uniform in `(θ/4, θ]`, anchors uniform in their interval.
    Randomized {
        i_min: i64,
        i_max: i64,
        theta_bound: f64,
        seed: u64,
    },
}

impl ArgumentSchedule {
    /// Validates and builds a schedule from explicit sequences.
    ///
    /// When `theta_bound` is `None` the largest gap is used.
    pub fn new(i_min: i64, thetas: Vec<f64>, zetas: Vec<f64>, theta_bound: Option<f64>) -> Result<Self> {
        if thetas.len() < 2 {
            return Err(Error::InvalidSchedule {
                index: i_min,
                reason: "need at least two interval endpoints".into(),
            });
        }
        if zetas.len() + 1 != thetas.len() {
            return Err(Error::InvalidSchedule {
                index: i_min,
                reason: format!(
                    "expected {} anchors for {} endpoints, got {}",
                    thetas.len() - 1,
                    thetas.len(),
                    zetas.len()
                ),
            });
        }
        let max_gap = thetas.windows(2).map(|w| w[1] - w[0]).fold(0.0_f64, f64::max);
        let bound = theta_bound.unwrap_or(max_gap);
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(Error::InvalidSchedule {
                index: i_min,
                reason: format!("gap bound must be positive and finite, got {bound}"),
            });
        }
        for (j, w) in thetas.windows(2).enumerate() {
            let index = i_min + j as i64;
            if !w[0].is_finite() || !w[1].is_finite() {
                return Err(Error::InvalidSchedule { index, reason: "non-finite endpoint".into() });
            }
            if w[0] >= w[1] {
                return Err(Error::InvalidSchedule {
                    index,
                    reason: format!("endpoints not increasing: {} >= {}", w[0], w[1]),
                });
            }
            if w[1] - w[0] > bound * (1.0 + 1e-12) {
                return Err(Error::InvalidSchedule {
                    index,
                    reason: format!("gap {} exceeds bound {}", w[1] - w[0], bound),
                });
            }
            let z = zetas[j];
            if !(w[0] <= z && z <= w[1]) {
                return Err(Error::InvalidSchedule {
                    index,
                    reason: format!("anchor {} outside [{}, {}]", z, w[0], w[1]),
                });
            }
        }
        Ok(Self { i_min, thetas, zetas, theta_bound: bound })
    }

    pub fn from_spec(spec: &ScheduleSpec) -> Result<Self> {
        match *spec {
            ScheduleSpec::Epca { i_min, i_max } => {
                check_window(i_min, i_max)?;
                let thetas: Vec<f64> = (i_min..=i_max).map(|i| i as f64).collect();
                let zetas = thetas[..thetas.len() - 1].to_vec();
                Self::new(i_min, thetas, zetas, Some(1.0))
            }
            ScheduleSpec::Alternating { i_min, i_max } => {
                check_window(i_min, i_max)?;
                let thetas: Vec<f64> = (i_min..=i_max).map(|i| (2 * i - 1) as f64).collect();
                let zetas = (i_min..i_max).map(|i| (2 * i) as f64).collect();
                Self::new(i_min, thetas, zetas, Some(2.0))
            }
            ScheduleSpec::Explicit { i_min, ref thetas, ref zetas, theta_bound } => {
                Self::new(i_min, thetas.clone(), zetas.clone(), theta_bound)
            }
            ScheduleSpec::Randomized { i_min, i_max, theta_bound, seed } => {
                check_window(i_min, i_max)?;
                if !(theta_bound > 0.0) || !theta_bound.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "theta_bound",
                        reason: format!("must be positive and finite, got {theta_bound}"),
                    });
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let count = (i_max - i_min) as usize;
                let mut thetas = Vec::with_capacity(count + 1);
                let mut zetas = Vec::with_capacity(count);
                thetas.push(0.0);
                for _ in 0..count {
                    let left = *thetas.last().unwrap();
                    let u: f64 = rng.random();
                    let gap = theta_bound - u * 0.75 * theta_bound;
                    let v: f64 = rng.random();
                    zetas.push(left + v * gap);
                    thetas.push(left + gap);
                }
                // Pin θ_0 = 0 when index 0 lies in the window.
                let shift = if i_min <= 0 && 0 <= i_max {
                    -thetas[(-i_min) as usize]
                } else {
                    i_min as f64 * 0.625 * theta_bound
                };
                thetas.iter_mut().for_each(|t| *t += shift);
                zetas.iter_mut().for_each(|z| *z += shift);
                Self::new(i_min, thetas, zetas, Some(theta_bound))
            }
        }
    }

    pub fn epca(i_min: i64, i_max: i64) -> Result<Self> {
        Self::from_spec(&ScheduleSpec::Epca { i_min, i_max })
    }

    pub fn alternating(i_min: i64, i_max: i64) -> Result<Self> {
        Self::from_spec(&ScheduleSpec::Alternating { i_min, i_max })
    }

    pub fn randomized(i_min: i64, i_max: i64, theta_bound: f64, seed: u64) -> Result<Self> {
        Self::from_spec(&ScheduleSpec::Randomized { i_min, i_max, theta_bound, seed })
    }

    /// First theta index of the window.
    pub fn i_min(&self) -> i64 {
        self.i_min
    }

    /// Last theta index of the window; the last interval is `i_max - 1`.
    pub fn i_max(&self) -> i64 {
        self.i_min + self.thetas.len() as i64 - 1
    }

    /// Indices of all intervals in the window.
    pub fn intervals(&self) -> std::ops::Range<i64> {
        self.i_min..self.i_max()
    }

    pub fn theta_bound(&self) -> f64 {
        self.theta_bound
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn zetas(&self) -> &[f64] {
        &self.zetas
    }

    /// Covered time range `[θ_{i_min}, θ_{i_max}]`.
    pub fn span(&self) -> (f64, f64) {
        (self.thetas[0], *self.thetas.last().unwrap())
    }

    /// `θ_i`. Panics when `i` is outside the window.
    pub fn theta(&self, i: i64) -> f64 {
        self.thetas[self.offset(i, self.thetas.len())]
    }

    /// `ζ_i`. Panics when interval `i` is outside the window.
    pub fn zeta(&self, i: i64) -> f64 {
        self.zetas[self.offset(i, self.zetas.len())]
    }

    /// `(θ_i, θ_{i+1})` for interval `i`.
    pub fn interval(&self, i: i64) -> (f64, f64) {
        (self.theta(i), self.theta(i + 1))
    }

    fn offset(&self, i: i64, len: usize) -> usize {
        let j = i - self.i_min;
        assert!(
            j >= 0 && (j as usize) < len,
            "index {i} outside schedule window starting at {}",
            self.i_min
        );
        j as usize
    }

    /// Index `i` with `θ_i ≤ t < θ_{i+1}`; `t = θ_{i_max}` maps to the last interval.
    pub fn interval_index(&self, t: f64) -> Result<i64> {
        let (lo, hi) = self.span();
        if !(lo <= t && t <= hi) {
            return Err(Error::WindowExceeded { t, lo, hi });
        }
        let above = self.thetas.partition_point(|&th| th <= t);
        let j = (above - 1).min(self.zetas.len() - 1);
        Ok(self.i_min + j as i64)
    }

    /// The deviating argument `β(t) = ζ_i` for `t ∈ [θ_i, θ_{i+1})`.
    pub fn beta(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.span();
        if !(lo <= t && t < hi) {
            return Err(Error::WindowExceeded { t, lo, hi });
        }
        Ok(self.zeta(self.interval_index(t)?))
    }

    /// Smallest `p ≤ 8` such that the schedule repeats every `p` intervals,
    /// with the corresponding time shift `θ_{i+p} − θ_i`.
    pub fn period(&self) -> Option<(usize, f64)> {
        let m = self.zetas.len();
        let scale = 1.0 + self.thetas.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        let tol = 1e-12 * scale;
        (1..=8.min(m / 2)).find_map(|p| {
            let shift = self.thetas[p] - self.thetas[0];
            let repeats = (0..m - p).all(|j| {
                (self.thetas[j + p] - self.thetas[j] - shift).abs() <= tol
                    && (self.zetas[j + p] - self.zetas[j] - shift).abs() <= tol
            }) && (self.thetas[m] - self.thetas[m - p] - shift).abs() <= tol;
            repeats.then_some((p, shift))
        })
    }

    /// Anchors `ζ_j` with `lo ≤ ζ_j ≤ hi`, as `(j, ζ_j)` pairs.
    pub fn zetas_in(&self, lo: f64, hi: f64) -> Vec<(i64, f64)> {
        self.intervals()
            .map(|i| (i, self.zeta(i)))
            .filter(|&(_, z)| lo <= z && z <= hi)
            .collect()
    }
}

fn check_window(i_min: i64, i_max: i64) -> Result<()> {
    if i_max <= i_min {
        return Err(Error::InvalidParameter {
            name: "window",
            reason: format!("need i_min < i_max, got [{i_min}, {i_max}]"),
        });
    }
    Ok(())
}
