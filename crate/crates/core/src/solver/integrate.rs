//! Classical fourth-order stepping inside one interval `[θ_i, θ_{i+1}]`, where
//! the anchored argument is a fixed vector and the equation is an ODE.

use nalgebra::DVector;

use super::system::HybridSystem;
use crate::error::{Error, Result};
use crate::schedule::ArgumentSchedule;

/// Dense output on one interval: step nodes with states and derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub index: i64,
    pub ts: Vec<f64>,
    pub zs: Vec<DVector<f64>>,
    pub dzs: Vec<DVector<f64>>,
}

impl Segment {
    pub fn t_min(&self) -> f64 {
        self.ts[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn first(&self) -> &DVector<f64> {
        &self.zs[0]
    }

    pub fn last(&self) -> &DVector<f64> {
        self.zs.last().unwrap()
    }

    /// Cubic Hermite interpolation between nodes; exact at nodes.
    pub fn eval(&self, t: f64) -> DVector<f64> {
        let n = self.ts.len();
        let above = self.ts.partition_point(|&s| s <= t);
        if above == 0 {
            return self.zs[0].clone();
        }
        if above >= n {
            return self.zs[n - 1].clone();
        }
        let j = above - 1;
        if t == self.ts[j] {
            return self.zs[j].clone();
        }
        let (t0, t1) = (self.ts[j], self.ts[j + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        &self.zs[j] * h00 + &self.dzs[j] * (h10 * h) + &self.zs[j + 1] * h01 + &self.dzs[j + 1] * (h11 * h)
    }

    /// Largest Euclidean norm over the nodes.
    pub fn max_norm(&self) -> f64 {
        self.zs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// One classical RK4 step of `z' = A z + f(t, z, w)` with signed step `h`.
pub(crate) fn rk4_step(sys: &HybridSystem, t: f64, z: &DVector<f64>, anchor: (&DVector<f64>, f64), h: f64) -> DVector<f64> {
    let (w, zeta) = anchor;
    let k1 = sys.rhs(t, z, w, zeta);
    let k2 = sys.rhs(t + 0.5 * h, &(z + &k1 * (0.5 * h)), w, zeta);
    let k3 = sys.rhs(t + 0.5 * h, &(z + &k2 * (0.5 * h)), w, zeta);
    let k4 = sys.rhs(t + h, &(z + &k3 * h), w, zeta);
    z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Sorted distinct breakpoints of interval `i` together with the anchor time.
pub(crate) fn breakpoints(sched: &ArgumentSchedule, i: i64, t_anchor: f64) -> Vec<f64> {
    let (a, b) = sched.interval(i);
    let mut pts = vec![a, sched.zeta(i), t_anchor, b];
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    pts
}

/// Step length actually used: at most a quarter of the interval.
pub(crate) fn effective_step(sched: &ArgumentSchedule, i: i64, step: f64) -> f64 {
    let (a, b) = sched.interval(i);
    step.min((b - a) / 4.0)
}

/// Integrates between consecutive breakpoints with uniform sub-steps no longer
/// than `step`, calling `visit` for every node after the start. Returns the
/// end state.
pub(crate) fn march<V>(
    sys: &HybridSystem,
    interval: i64,
    from: (f64, &DVector<f64>),
    to: f64,
    anchor: (&DVector<f64>, f64),
    step: f64,
    mut visit: V,
) -> Result<DVector<f64>>
where
    V: FnMut(f64, &DVector<f64>),
{
    let (t0, z0) = from;
    let len = to - t0;
    if len == 0.0 {
        return Ok(z0.clone());
    }
    let count = (len.abs() / step).ceil().max(1.0) as usize;
    let h = len / count as f64;
    let mut z = z0.clone();
    let mut t = t0;
    for k in 1..=count {
        let next = rk4_step(sys, t, &z, anchor, h);
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::BlowUp { interval, t_last: t });
        }
        z = next;
        t = if k == count { to } else { t0 + h * k as f64 };
        visit(t, &z);
    }
    Ok(z)
}

/// Dense solution of `z' = A z + f(t, z, w)` on the whole of `[θ_i, θ_{i+1}]`
/// with `w` held fixed, passing through `z_anchor` at `t_anchor`.
///
/// Integration runs from `t_anchor` in both directions; nodes land exactly on
/// the interval endpoints and on `ζ_i`.
pub fn integrate_interval(
    sys: &HybridSystem,
    sched: &ArgumentSchedule,
    i: i64,
    t_anchor: f64,
    z_anchor: &DVector<f64>,
    w: &DVector<f64>,
    step: f64,
) -> Result<Segment> {
    check_anchor(sched, i, t_anchor, step)?;
    let step = effective_step(sched, i, step);
    let pts = breakpoints(sched, i, t_anchor);
    let k = pts.iter().position(|&p| p == t_anchor).unwrap();
    let anchor = (w, sched.zeta(i));

    // forward part
    let mut fwd: Vec<(f64, DVector<f64>)> = Vec::new();
    let mut z = z_anchor.clone();
    for pair in pts[k..].windows(2) {
        z = march(sys, i, (pair[0], &z), pair[1], anchor, step, |t, s| fwd.push((t, s.clone())))?;
    }
    // backward part, collected right to left
    let mut bwd: Vec<(f64, DVector<f64>)> = Vec::new();
    let mut z = z_anchor.clone();
    for pair in pts[..=k].windows(2).rev() {
        z = march(sys, i, (pair[1], &z), pair[0], anchor, step, |t, s| bwd.push((t, s.clone())))?;
    }

    let total = fwd.len() + bwd.len() + 1;
    let mut ts = Vec::with_capacity(total);
    let mut zs = Vec::with_capacity(total);
    for (t, s) in bwd.into_iter().rev() {
        ts.push(t);
        zs.push(s);
    }
    ts.push(t_anchor);
    zs.push(z_anchor.clone());
    for (t, s) in fwd {
        ts.push(t);
        zs.push(s);
    }
    let dzs = ts.iter().zip(&zs).map(|(&t, s)| sys.rhs(t, s, w, anchor.1)).collect();
    Ok(Segment { index: i, ts, zs, dzs })
}

/// Values at the interval breakpoints only: `(θ_i, ζ_i, θ_{i+1})` states plus
/// the largest node norm. No dense output is kept.
pub(crate) struct NodeValues {
    pub left: DVector<f64>,
    pub at_zeta: DVector<f64>,
    pub right: DVector<f64>,
    pub max_norm: f64,
}

pub(crate) fn integrate_nodes(
    sys: &HybridSystem,
    sched: &ArgumentSchedule,
    i: i64,
    t_anchor: f64,
    z_anchor: &DVector<f64>,
    w: &DVector<f64>,
    step: f64,
) -> Result<NodeValues> {
    let step = effective_step(sched, i, step);
    let pts = breakpoints(sched, i, t_anchor);
    let k = pts.iter().position(|&p| p == t_anchor).unwrap();
    let anchor = (w, sched.zeta(i));
    let mut values = vec![DVector::zeros(0); pts.len()];
    values[k] = z_anchor.clone();
    let mut max_norm = z_anchor.norm();
    for j in k..pts.len() - 1 {
        let start = values[j].clone();
        values[j + 1] = march(sys, i, (pts[j], &start), pts[j + 1], anchor, step, |_, s| {
            max_norm = max_norm.max(s.norm())
        })?;
    }
    for j in (1..=k).rev() {
        let start = values[j].clone();
        values[j - 1] = march(sys, i, (pts[j], &start), pts[j - 1], anchor, step, |_, s| {
            max_norm = max_norm.max(s.norm())
        })?;
    }
    let zeta = sched.zeta(i);
    let at_zeta = values[pts.iter().position(|&p| p == zeta).unwrap()].clone();
    let right = values.pop().unwrap();
    let left = values.swap_remove(0);
    Ok(NodeValues { left, at_zeta, right, max_norm })
}

pub(crate) fn check_anchor(sched: &ArgumentSchedule, i: i64, t_anchor: f64, step: f64) -> Result<()> {
    if !sched.intervals().contains(&i) {
        let (lo, hi) = sched.span();
        return Err(Error::WindowExceeded { t: t_anchor, lo, hi });
    }
    let (a, b) = sched.interval(i);
    if !(a <= t_anchor && t_anchor <= b) {
        return Err(Error::InvalidParameter {
            name: "t_anchor",
            reason: format!("{t_anchor} not in interval {i} = [{a}, {b}]"),
        });
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParameter { name: "step", reason: format!("must be positive, got {step}") });
    }
    Ok(())
}
