//! Interval-by-interval continuation in both time directions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::anchor::{solve_anchor, AnchorSolution, SolverOptions};
use super::integrate::Segment;
use super::system::HybridSystem;
use crate::error::{Error, Result};
use crate::schedule::ArgumentSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

/// Per-interval anchor diagnostics, in marching order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub index: i64,
    pub iterates: usize,
    pub last_delta: f64,
    pub ratios: Vec<f64>,
    pub expanding: bool,
    pub alternative_anchor: Option<Vec<f64>>,
}

impl From<&AnchorSolution> for IntervalReport {
    fn from(sol: &AnchorSolution) -> Self {
        Self {
            index: sol.interval,
            iterates: sol.iterates,
            last_delta: sol.last_delta(),
            ratios: sol.ratios.clone(),
            expanding: sol.expanding,
            alternative_anchor: sol.alternative.as_ref().map(|w| w.iter().copied().collect()),
        }
    }
}

/// Piecewise-smooth numerical solution with breakpoints at the `θ_i`.
///
/// Every segment covers its whole interval; `span` is the requested time range.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub direction: Direction,
    /// `(lo, hi)` with the initial time at `lo` (forward) or `hi` (backward).
    pub span: (f64, f64),
    /// Ordered by interval index.
    pub segments: Vec<Segment>,
    pub anchors: BTreeMap<i64, DVector<f64>>,
    pub reports: Vec<IntervalReport>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.segments[0].zs[0].len()
    }

    pub fn segment(&self, i: i64) -> Option<&Segment> {
        self.segments.iter().find(|s| s.index == i)
    }

    /// State at `t`; at a shared endpoint the right-hand interval is used.
    pub fn eval(&self, t: f64) -> Option<DVector<f64>> {
        self.segments
            .iter()
            .rev()
            .find(|s| s.t_min() <= t && t <= s.t_max())
            .map(|s| s.eval(t))
    }

    /// True when any interval flagged a possible second continuation.
    pub fn nonunique(&self) -> bool {
        self.reports.iter().any(|r| r.expanding || r.alternative_anchor.is_some())
    }

    /// Node samples inside the span plus its endpoints, strictly increasing in `t`.
    pub fn samples(&self) -> Vec<(f64, i64, DVector<f64>)> {
        let (lo, hi) = self.span;
        let mut out: Vec<(f64, i64, DVector<f64>)> = Vec::new();
        let first = &self.segments[0];
        out.push((lo, first.index, self.eval(lo).unwrap()));
        for seg in &self.segments {
            for (t, z) in seg.ts.iter().zip(&seg.zs) {
                if *t > out.last().unwrap().0 && *t < hi {
                    out.push((*t, seg.index, z.clone()));
                }
            }
        }
        let last = self.segments.last().unwrap();
        out.push((hi, last.index, self.eval(hi).unwrap()));
        out
    }

    /// CSV with columns `t, z_1..z_n, interval_index`.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut s = String::from("t");
        for j in 1..=n {
            let _ = write!(s, ",z_{j}");
        }
        s.push_str(",interval_index\n");
        for (t, i, z) in self.samples() {
            let _ = write!(s, "{t:.17e}");
            for x in z.iter() {
                let _ = write!(s, ",{x:.17e}");
            }
            let _ = writeln!(s, ",{i}");
        }
        s
    }

    /// Largest mismatch between adjacent segments at their shared endpoint.
    pub fn continuity_defect(&self) -> f64 {
        self.segments
            .windows(2)
            .map(|p| (p[0].last() - p[1].first()).norm())
            .fold(0.0, f64::max)
    }
}

/// Continues the solution through `(t0, z0)` forward to `t_end`.
///
/// On the first interval the anchor is resolved from the datum at `t0`
/// (integrating backwards within the interval when `ζ_i < t0`); every later
/// interval starts from the state at its left endpoint.
pub fn solve_forward(
    sys: &HybridSystem,
    sched: &ArgumentSchedule,
    t0: f64,
    z0: &DVector<f64>,
    t_end: f64,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    let (lo, hi) = sched.span();
    if !(lo <= t0 && t0 < t_end && t_end <= hi) {
        return Err(Error::WindowExceeded { t: if t0 < lo { t0 } else { t_end }, lo, hi });
    }
    check_dim(sys, z0)?;
    let mut i = sched.interval_index(t0)?;
    let mut t_anchor = t0;
    let mut datum = z0.clone();
    let mut traj = Trajectory {
        direction: Direction::Forward,
        span: (t0, t_end),
        segments: Vec::new(),
        anchors: BTreeMap::new(),
        reports: Vec::new(),
    };
    loop {
        let (sol, seg) = solve_anchor(sys, sched, i, t_anchor, &datum, opts)?;
        traj.reports.push(IntervalReport::from(&sol));
        traj.anchors.insert(i, sol.w);
        let right = sched.theta(i + 1);
        datum = seg.last().clone();
        traj.segments.push(seg);
        if right >= t_end {
            break;
        }
        i += 1;
        t_anchor = right;
    }
    Ok(traj)
}

/// Continues the solution through `(t0, z0)` backward to `t_start`.
///
/// On each interval the datum sits at its right end (or at `t0`) and the
/// anchor `z(ζ_i)` is resolved implicitly. When the iteration expands, or the
/// uniqueness probe finds a second anchor, the interval is flagged.
pub fn solve_backward(
    sys: &HybridSystem,
    sched: &ArgumentSchedule,
    t0: f64,
    z0: &DVector<f64>,
    t_start: f64,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    let (lo, hi) = sched.span();
    if !(lo <= t_start && t_start < t0 && t0 <= hi) {
        return Err(Error::WindowExceeded { t: if t_start < lo { t_start } else { t0 }, lo, hi });
    }
    check_dim(sys, z0)?;
    // interval with θ_i < t0 ≤ θ_{i+1}
    let mut i = sched.interval_index(t0)?;
    if sched.theta(i) == t0 {
        i -= 1;
    }
    let mut t_anchor = t0;
    let mut datum = z0.clone();
    let mut traj = Trajectory {
        direction: Direction::Backward,
        span: (t_start, t0),
        segments: Vec::new(),
        anchors: BTreeMap::new(),
        reports: Vec::new(),
    };
    loop {
        let (sol, seg) = solve_anchor(sys, sched, i, t_anchor, &datum, opts)?;
        traj.reports.push(IntervalReport::from(&sol));
        traj.anchors.insert(i, sol.w);
        let left = sched.theta(i);
        datum = seg.first().clone();
        traj.segments.push(seg);
        if left <= t_start {
            break;
        }
        i -= 1;
        t_anchor = left;
    }
    traj.segments.reverse();
    Ok(traj)
}

fn check_dim(sys: &HybridSystem, z0: &DVector<f64>) -> Result<()> {
    if z0.len() != sys.dim() {
        return Err(Error::InvalidParameter {
            name: "z0",
            reason: format!("length {} does not match system dimension {}", z0.len(), sys.dim()),
        });
    }
    Ok(())
}

/// Forward march that keeps only the running state, for long horizons.
///
/// `observe(t, z, max_norm_on_interval)` is called at each interval end; return
/// `false` to stop early. Returns the time reached.
pub(crate) fn march_forward<O>(
    sys: &HybridSystem,
    sched: &ArgumentSchedule,
    t0: f64,
    z0: &DVector<f64>,
    t_end: f64,
    opts: &SolverOptions,
    mut observe: O,
) -> Result<f64>
where
    O: FnMut(f64, &DVector<f64>, f64) -> bool,
{
    let mut i = sched.interval_index(t0)?;
    let mut t_anchor = t0;
    let mut datum = z0.clone();
    loop {
        let sol = super::anchor::anchor_fixed_point(sys, sched, i, t_anchor, &datum, opts)?;
        let right = sched.theta(i + 1);
        if !observe(right, &sol.right, sol.max_norm) || right >= t_end {
            return Ok(right);
        }
        datum = sol.right;
        i += 1;
        t_anchor = right;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm_t;
    use nalgebra::DMatrix;

    #[test]
    fn linear_forward_matches_flow() {
        let a = DMatrix::from_row_slice(2, 2, &[-0.3, 1.0, -1.0, -0.3]);
        let sys = HybridSystem::linear(a.clone()).unwrap();
        let sched = ArgumentSchedule::randomized(0, 8, 1.0, 4).unwrap();
        let z0 = DVector::from_vec(vec![1.0, 0.5]);
        let t0 = sched.theta(0) + 0.1;
        let t_end = sched.theta(5) + 0.05;
        let traj = solve_forward(&sys, &sched, t0, &z0, t_end, &SolverOptions::default()).unwrap();
        assert_eq!(traj.segments.len(), 6);
        for (t, _, z) in traj.samples() {
            let exact = expm_t(&a, t - t0) * &z0;
            assert!((z - exact).norm() < 1e-6, "t = {t}");
        }
        assert_eq!(traj.continuity_defect(), 0.0);
    }

    #[test]
    fn linear_backward_matches_flow() {
        let a = DMatrix::from_element(1, 1, -0.7);
        let sys = HybridSystem::linear(a.clone()).unwrap();
        let sched = ArgumentSchedule::alternating(-2, 3).unwrap();
        let z0 = DVector::from_element(1, 2.0);
        let traj = solve_backward(&sys, &sched, 4.5, &z0, -4.0, &SolverOptions::default()).unwrap();
        assert_eq!(traj.direction, Direction::Backward);
        for (t, _, z) in traj.samples() {
            assert!((z[0] - 2.0 * (-0.7 * (t - 4.5)).exp()).abs() < 1e-6 * (1.0 + z[0].abs()));
        }
    }

    #[test]
    fn samples_are_strictly_increasing() {
        let sys = HybridSystem::linear(DMatrix::from_element(1, 1, -1.0)).unwrap();
        let sched = ArgumentSchedule::epca(0, 5).unwrap();
        let z0 = DVector::from_element(1, 1.0);
        let traj = solve_forward(&sys, &sched, 0.5, &z0, 3.5, &SolverOptions::default()).unwrap();
        let s = traj.samples();
        assert!(s.windows(2).all(|p| p[0].0 < p[1].0));
        assert_eq!(s[0].0, 0.5);
        assert_eq!(s.last().unwrap().0, 3.5);
        let csv = traj.to_csv();
        assert!(csv.starts_with("t,z_1,interval_index\n"));
    }

    #[test]
    fn window_violations() {
        let sys = HybridSystem::linear(DMatrix::from_element(1, 1, -1.0)).unwrap();
        let sched = ArgumentSchedule::epca(0, 5).unwrap();
        let z0 = DVector::from_element(1, 1.0);
        let opts = SolverOptions::default();
        assert!(solve_forward(&sys, &sched, 0.5, &z0, 6.0, &opts).is_err());
        assert!(solve_forward(&sys, &sched, 2.0, &z0, 1.0, &opts).is_err());
        assert!(solve_backward(&sys, &sched, 2.0, &z0, -1.0, &opts).is_err());
        let bad = DVector::from_element(2, 1.0);
        assert!(solve_forward(&sys, &sched, 0.5, &bad, 2.0, &opts).is_err());
    }
}
