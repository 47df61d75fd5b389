//! Implicit anchor value `w = z(ζ_i)` on one interval, resolved by
//! fixed-point iteration of the interval flow.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::integrate::{check_anchor, integrate_interval, integrate_nodes, Segment};
use super::system::HybridSystem;
use crate::error::{Error, Result};
use crate::schedule::ArgumentSchedule;

/// Integration and iteration controls shared by all solver entry points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Largest RK4 step; capped at a quarter of each interval.
    pub step: f64,
    /// Stopping threshold on `‖w_{m+1} − w_m‖`.
    pub tol: f64,
    pub max_iter: usize,
    /// Search for a second anchor with multi-start Newton after convergence.
    pub probe_uniqueness: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { step: 0.01, tol: 1e-10, max_iter: 200, probe_uniqueness: false }
    }
}

impl SolverOptions {
    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_probe(mut self, probe: bool) -> Self {
        self.probe_uniqueness = probe;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidParameter { name: "step", reason: format!("must be positive, got {}", self.step) });
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter { name: "tol", reason: format!("must be positive, got {}", self.tol) });
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter { name: "max_iter", reason: "must be at least 1".into() });
        }
        Ok(())
    }
}

/// Outcome of the anchor iteration on one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSolution {
    pub interval: i64,
    /// Converged anchor `z(ζ_i)`.
    pub w: DVector<f64>,
    pub iterates: usize,
    /// `‖w_{m+1} − w_m‖` per iterate.
    pub deltas: Vec<f64>,
    /// Successive delta ratios.
    pub ratios: Vec<f64>,
    /// Some ratio exceeded one.
    pub expanding: bool,
    /// A second, distinct anchor found by the uniqueness probe.
    pub alternative: Option<DVector<f64>>,
    pub(crate) left: DVector<f64>,
    pub(crate) right: DVector<f64>,
    pub(crate) max_norm: f64,
}

impl AnchorSolution {
    pub fn last_delta(&self) -> f64 {
        self.deltas.last().copied().unwrap_or(0.0)
    }

    /// True when the anchor is known not to be unique or the iteration expanded.
    pub fn nonunique(&self) -> bool {
        self.expanding || self.alternative.is_some()
    }
}

/// Fixed-point iteration for the anchor on interval `i` given the datum
/// `z(t_anchor) = z_anchor`. Only breakpoint values are kept.
pub(crate) fn anchor_fixed_point(
    sys: &HybridSystem,
    sched: &ArgumentSchedule,
    i: i64,
    t_anchor: f64,
    z_anchor: &DVector<f64>,
    opts: &SolverOptions,
) -> Result<AnchorSolution> {
    opts.validate()?;
    check_anchor(sched, i, t_anchor, opts.step)?;
    let zeta = sched.zeta(i);

    let done = |w: DVector<f64>, nodes: super::integrate::NodeValues, deltas: Vec<f64>| {
        let ratios: Vec<f64> = deltas.windows(2).map(|d| d[1] / d[0]).collect();
        let expanding = ratios.iter().any(|&r| r > 1.0);
        AnchorSolution {
            interval: i,
            w,
            iterates: deltas.len(),
            deltas,
            ratios,
            expanding,
            alternative: None,
            left: nodes.left,
            right: nodes.right,
            max_norm: nodes.max_norm,
        }
    };

    if t_anchor == zeta {
        let nodes = integrate_nodes(sys, sched, i, t_anchor, z_anchor, z_anchor, opts.step)?;
        return Ok(done(z_anchor.clone(), nodes, Vec::new()));
    }

    // initial guess: w-slot frozen at the datum
    let mut w = integrate_nodes(sys, sched, i, t_anchor, z_anchor, z_anchor, opts.step)?.at_zeta;
    let mut deltas = Vec::new();
    for _ in 0..opts.max_iter {
        let nodes = match integrate_nodes(sys, sched, i, t_anchor, z_anchor, &w, opts.step) {
            Ok(n) => n,
            Err(Error::BlowUp { .. }) => return Err(non_contraction(i, &deltas)),
            Err(e) => return Err(e),
        };
        let delta = (&nodes.at_zeta - &w).norm();
        if !delta.is_finite() {
            return Err(non_contraction(i, &deltas));
        }
        deltas.push(delta);
        if delta < opts.tol {
            return Ok(done(w, nodes, deltas));
        }
        w = nodes.at_zeta;
    }
    Err(non_contraction(i, &deltas))
}

fn non_contraction(interval: i64, deltas: &[f64]) -> Error {
    Error::NonContraction {
        interval,
        iterates: deltas.len(),
        ratios: deltas.windows(2).map(|d| d[1] / d[0]).collect(),
    }
}

/// Resolves the anchor `w = z(ζ_i)` and returns it with the dense segment
/// integrated using that anchor.
///
/// The iteration starts from the segment value at `ζ_i` obtained with the
/// `w`-slot frozen at `z_anchor`; each sweep integrates the interval with the
/// current `w` and reads the new value at `ζ_i`.
pub fn solve_anchor(
    sys: &HybridSystem,
    sched: &ArgumentSchedule,
    i: i64,
    t_anchor: f64,
    z_anchor: &DVector<f64>,
    opts: &SolverOptions,
) -> Result<(AnchorSolution, Segment)> {
    let mut sol = anchor_fixed_point(sys, sched, i, t_anchor, z_anchor, opts)?;
    if opts.probe_uniqueness && t_anchor != sched.zeta(i) {
        sol.alternative = probe_alternative_anchor(sys, sched, i, t_anchor, z_anchor, &sol.w, opts);
    }
    let seg = integrate_interval(sys, sched, i, t_anchor, z_anchor, &sol.w, opts.step)?;
    Ok((sol, seg))
}

/// Multi-start Newton search for a root of `Φ(w) − w` other than `found`.
fn probe_alternative_anchor(
    sys: &HybridSystem,
    sched: &ArgumentSchedule,
    i: i64,
    t_anchor: f64,
    z_anchor: &DVector<f64>,
    found: &DVector<f64>,
    opts: &SolverOptions,
) -> Option<DVector<f64>> {
    let n = found.len();
    let residual = |w: &DVector<f64>| -> Option<DVector<f64>> {
        integrate_nodes(sys, sched, i, t_anchor, z_anchor, w, opts.step)
            .ok()
            .map(|nodes| nodes.at_zeta - w)
            .filter(|r| r.iter().all(|x| x.is_finite()))
    };
    let scale = 1.0 + found.norm();
    let mut starts = vec![DVector::zeros(n), z_anchor.clone()];
    for j in 0..n {
        for s in [2.0, -2.0] {
            let mut w = found.clone();
            w[j] += s * scale;
            starts.push(w);
        }
    }
    let separation = (1e-6 * scale).max(1e4 * opts.tol);
    for start in starts {
        let mut w = start;
        'newton: for _ in 0..40 {
            let Some(r) = residual(&w) else { break };
            if r.norm() < (10.0 * opts.tol).max(1e-12 * scale) {
                if (&w - found).norm() > separation {
                    return Some(w);
                }
                break;
            }
            let mut jac = DMatrix::zeros(n, n);
            for k in 0..n {
                let h = 1e-7 * (1.0 + w[k].abs());
                let mut wp = w.clone();
                wp[k] += h;
                let Some(rp) = residual(&wp) else { break 'newton };
                jac.set_column(k, &((rp - &r) / h));
            }
            let Some(dw) = jac.lu().solve(&(-&r)) else { break };
            w += dw;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm_t;

    #[test]
    fn linear_anchor_converges_after_one_iterate() {
        let a = DMatrix::from_row_slice(2, 2, &[-0.5, 1.0, 0.0, -0.2]);
        let sys = HybridSystem::linear(a.clone()).unwrap();
        let sched = ArgumentSchedule::new(0, vec![0.0, 1.0], vec![0.7], None).unwrap();
        let z0 = DVector::from_vec(vec![1.0, -2.0]);
        let (sol, _) = solve_anchor(&sys, &sched, 0, 0.1, &z0, &SolverOptions::default().with_step(0.005)).unwrap();
        assert_eq!(sol.iterates, 1);
        let exact = expm_t(&a, 0.6) * &z0;
        assert!((sol.w - exact).norm() < 1e-9);
    }

    #[test]
    fn anchor_at_datum_needs_no_iteration() {
        let sys = HybridSystem::linear(DMatrix::from_element(1, 1, -1.0)).unwrap();
        let sched = ArgumentSchedule::epca(0, 2).unwrap();
        let z0 = DVector::from_element(1, 2.0);
        let (sol, seg) = solve_anchor(&sys, &sched, 1, 1.0, &z0, &SolverOptions::default()).unwrap();
        assert_eq!(sol.iterates, 0);
        assert_eq!(sol.w, z0);
        assert_eq!(seg.eval(1.0), z0);
    }

    /// Forward continuation of `z' = 3z − z²(β(t))` from `t = −1` to the
    /// advanced anchor `ζ = 0`: `z(0) = w` must solve
    /// `(e³−1)w² + 3w − 3e³x₀ = 0`, which has no real root for `x₀ = −10`.
    #[test]
    fn example1_without_real_root_fails_to_contract() {
        let e3 = 3.0_f64.exp();
        let x0 = -10.0;
        let disc = 9.0 + 12.0 * e3 * (e3 - 1.0) * x0;
        assert!(disc < 0.0);
        let sys = HybridSystem::new_unchecked(DMatrix::from_element(1, 1, 3.0), 0.0, |_, _, w| w.map(|x| -x * x))
            .unwrap();
        let sched = ArgumentSchedule::alternating(0, 1).unwrap();
        let err = solve_anchor(&sys, &sched, 0, -1.0, &DVector::from_element(1, x0), &SolverOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::NonContraction { interval: 0, .. }), "{err:?}");
    }

    /// With a small positive datum the quadratic has two real roots; the
    /// iteration lands on the attracting one.
    #[test]
    fn example1_with_real_root_converges() {
        let e3 = 3.0_f64.exp();
        let x0 = 0.002;
        let sys = HybridSystem::new_unchecked(DMatrix::from_element(1, 1, 3.0), 0.0, |_, _, w| w.map(|x| -x * x))
            .unwrap();
        let sched = ArgumentSchedule::alternating(0, 1).unwrap();
        let opts = SolverOptions::default().with_step(1e-3);
        let (sol, _) = solve_anchor(&sys, &sched, 0, -1.0, &DVector::from_element(1, x0), &opts).unwrap();
        let w = sol.w[0];
        let residual = (e3 - 1.0) * w * w + 3.0 * w - 3.0 * e3 * x0;
        assert!(residual.abs() < 1e-7, "residual {residual}");
    }
}
