//! Numerical check that solutions starting on the stable surface stay on it.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::graph::ManifoldSetup;
use crate::error::{Error, Result};
use crate::linalg::{concat, split_at};
use crate::solver::{solve_forward, HybridSystem, SolverOptions, Trajectory};

/// Defect of one on-surface run at the anchor times it crosses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub start: f64,
    pub zetas: Vec<f64>,
    /// `‖v(ζ_j) − F(ζ_j, u(ζ_j))‖` in block coordinates.
    pub defects: Vec<f64>,
    /// Picard tolerance plus the step-halving change of `F` at the start.
    pub quadrature_tol: f64,
    /// Solver tolerance plus the step-halving change of the endpoint.
    pub integrator_tol: f64,
    /// Size of the perturbation added to the center coordinates.
    pub offset: f64,
    /// Smallest `‖v(t)‖` along the perturbed run.
    pub off_surface_min_center: f64,
    /// Largest `‖v_off(t)‖ / max(‖v_on(t)‖, offset)` along the perturbed run.
    pub off_surface_growth: f64,
}

impl InvarianceReport {
    pub fn max_defect(&self) -> f64 {
        self.defects.iter().copied().fold(0.0, f64::max)
    }

    pub fn threshold(&self) -> f64 {
        10.0 * (self.quadrature_tol + self.integrator_tol)
    }

    pub fn passes(&self) -> bool {
        self.max_defect() <= self.threshold()
    }
}

/// Starts at `(ζ_i, (c, F(ζ_i, c)))`, follows the solution across the next
/// `span` anchor times and measures how far it drifts from the surface.
/// A second run with the center part shifted by `offset` along its first
/// axis shows that leaving the surface removes the decay.
pub fn verify_surface_invariance(
    sys: &HybridSystem,
    setup: &ManifoldSetup,
    interval: i64,
    c: &DVector<f64>,
    span: usize,
    offset: f64,
    solver: &SolverOptions,
) -> Result<InvarianceReport> {
    let split = setup.split();
    let k = split.k;
    let n = split.dim();
    if k == n {
        return Err(Error::DegenerateDimension("no center coordinates to perturb".into()));
    }
    if span == 0 {
        return Err(Error::InvalidParameter { name: "span", reason: "must be at least one".into() });
    }
    let sched = setup.schedule();
    let start = sched.zeta(interval);
    let last = interval + span as i64;
    let t_end = sched.theta(last + 1);

    let on = setup.eval_f(start, c)?;
    let mut fine_opts = *setup.options();
    fine_opts.step /= 2.0;
    let fine = ManifoldSetup::new(sys, sched, split, setup.bundle(), &fine_opts)?;
    let richardson = (&fine.eval_f(start, c)?.value - &on.value).norm();
    let quadrature_tol = setup.options().tol + richardson;

    let y0 = concat(c, &on.value);
    let z0 = &split.inverse * &y0;
    let traj = solve_forward(sys, sched, start, &z0, t_end, solver)?;
    let halved = solve_forward(sys, sched, start, &z0, t_end, &solver.with_step(solver.step / 2.0))?;
    let integrator_tol = solver.tol + (traj.eval(t_end).unwrap() - halved.eval(t_end).unwrap()).norm();

    let mut zetas = Vec::with_capacity(span);
    let mut defects = Vec::with_capacity(span);
    for j in interval + 1..=last {
        let z = &traj.anchors[&j];
        let (u, v) = split_at(&(&split.transform * z), k);
        let f = setup.eval_f(sched.zeta(j), &u)?.value;
        zetas.push(sched.zeta(j));
        defects.push((v - f).norm());
    }

    let mut bump = DVector::zeros(n - k);
    bump[0] = offset;
    let y_off = concat(c, &(&on.value + bump));
    let off = solve_forward(sys, sched, start, &(&split.inverse * y_off), t_end, solver)?;
    let (min_center, growth) = compare_center(&traj, &off, &split.transform, k, offset);

    Ok(InvarianceReport {
        start,
        zetas,
        defects,
        quadrature_tol,
        integrator_tol,
        offset,
        off_surface_min_center: min_center,
        off_surface_growth: growth,
    })
}

fn compare_center(
    on: &Trajectory,
    off: &Trajectory,
    transform: &DMatrix<f64>,
    k: usize,
    offset: f64,
) -> (f64, f64) {
    let mut min_center = f64::INFINITY;
    let mut growth: f64 = 0.0;
    for (t, _, z) in off.samples() {
        let v_off = split_at(&(transform * z), k).1.norm();
        let v_on = on.eval(t).map(|z| split_at(&(transform * z), k).1.norm()).unwrap_or(0.0);
        min_center = min_center.min(v_off);
        growth = growth.max(v_off / v_on.max(offset));
    }
    (min_center, growth)
}
