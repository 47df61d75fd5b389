//! Companion solution on the center surface that a given solution
//! approaches exponentially.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{concat, split_at};
use crate::manifolds::{BlockFn, ManifoldSetup, StartGuess};
use crate::solver::{solve_forward, HybridSystem, SolverOptions, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseOptions {
    /// Stopping threshold on `‖d_{j+1} − d_j‖`.
    pub tol: f64,
    pub max_iter: usize,
    /// Length of the decay check in multiples of the largest interval.
    pub horizon_intervals: f64,
    pub solver: SolverOptions,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 50, horizon_intervals: 10.0, solver: SolverOptions::default() }
    }
}

/// Outcome of [`asymptotic_phase`]. Vectors are in block coordinates.
#[derive(Debug, Clone)]
pub struct PhaseResult {
    pub start: f64,
    /// Center coordinates of the companion at `start`.
    pub d_star: DVector<f64>,
    pub iterates: Vec<DVector<f64>>,
    /// Radius of the ball the iterates must stay in, `‖u₀ − G(t, v₀)‖`.
    pub ball_radius: f64,
    /// `‖d_j − v₀‖` for every iterate.
    pub ball_distances: Vec<f64>,
    /// Initial offset from the companion, `‖y₀ − (G(t, d*), d*)‖`.
    pub offset: f64,
    /// `K(1 + 2pl)` times `offset`.
    pub bound: f64,
    /// `(t, ‖y(t) − μ(t)‖ e^{α(t − start)})` along the check horizon.
    pub weighted: Vec<(f64, f64)>,
    pub solution: Trajectory,
    pub companion: Trajectory,
}

impl PhaseResult {
    pub fn max_weighted(&self) -> f64 {
        self.weighted.iter().map(|p| p.1).fold(0.0, f64::max)
    }

    /// Largest ratio of the weighted difference to its bound.
    pub fn bound_ratio(&self) -> f64 {
        if self.bound > 0.0 {
            self.max_weighted() / self.bound
        } else if self.max_weighted() == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Finds the point `(G(t, d*), d*)` on the center surface, `t = ζ_i`, whose
/// solution the solution through `(t, z0)` converges to.
///
/// Iterates `d_{j+1} = v₀ − F̃(t, u₀ − G(t, d_j), d_j)`, where `F̃` is the
/// stable graph of the equation for the difference from the solution
/// through `(G(t, d_j), d_j)`.
pub fn asymptotic_phase(
    sys: &HybridSystem,
    setup: &ManifoldSetup,
    interval: i64,
    z0: &DVector<f64>,
    opts: &PhaseOptions,
) -> Result<PhaseResult> {
    let split = setup.split();
    let sched = setup.schedule();
    let t = sched.zeta(interval);
    let k = split.k;
    if k == split.dim() {
        return Err(Error::DegenerateDimension("no center coordinates".into()));
    }
    if z0.len() != split.dim() {
        return Err(Error::InvalidParameter { name: "z0", reason: format!("expected length {}", split.dim()) });
    }
    let y0 = &split.transform * z0;
    let (u0, v0) = split_at(&y0, k);
    let ball_radius = (&u0 - setup.eval_g(t, &v0)?.value).norm();
    let slack = 1e-9 * ball_radius + 10.0 * opts.tol.max(setup.options().tol);
    let graph_end = sched.theta(sched.interval_index(t + setup.stable_horizon())? + 1);

    let mut d = v0.clone();
    let mut iterates = vec![d.clone()];
    let mut ball_distances = vec![0.0];
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let g = setup.eval_g(t, &d)?.value;
        let c = &u0 - &g;
        let companion = solve_forward(sys, sched, t, &(&split.inverse * concat(&g, &d)), graph_end, &opts.solver)?;
        let q = translated(setup, split.transform.clone(), companion, interval);
        let f_tilde = setup.stable_graph_with(q, t, &c, setup.stable_horizon(), StartGuess::Zero)?.value;
        let next = &v0 - f_tilde;
        let distance = (&next - &v0).norm();
        if distance > ball_radius + slack {
            return Err(Error::ContractionFailure { distance, radius: ball_radius });
        }
        let step = (&next - &d).norm();
        d = next;
        iterates.push(d.clone());
        ball_distances.push(distance);
        if step < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        let deltas = iterates.windows(2).map(|w| (&w[1] - &w[0]).norm()).collect();
        return Err(Error::Divergence { iterates: iterates.len() - 1, deltas });
    }

    let g_star = setup.eval_g(t, &d)?.value;
    let on_surface = concat(&g_star, &d);
    let offset = (&y0 - &on_surface).norm();
    let bundle = setup.bundle();
    let bound = bundle.k_const * (1.0 + setup.stable_smallness()) * offset;
    let t_end = t + opts.horizon_intervals * sched.theta_bound();
    let solution = solve_forward(sys, sched, t, z0, t_end, &opts.solver)?;
    let companion = solve_forward(sys, sched, t, &(&split.inverse * on_surface), t_end, &opts.solver)?;
    let weighted = solution
        .samples()
        .into_iter()
        .map(|(s, _, z)| {
            let mu = companion.eval(s).expect("same span");
            (s, (&split.transform * (z - mu)).norm() * (bundle.alpha * (s - t)).exp())
        })
        .collect();
    Ok(PhaseResult {
        start: t,
        d_star: d,
        iterates,
        ball_radius,
        ball_distances,
        offset,
        bound,
        weighted,
        solution,
        companion,
    })
}

/// `Q(s, Y, Ŷ, ζ) = ĝ(s, Y + m(s), Ŷ + m(ζ), ζ) − ĝ(s, m(s), m(ζ), ζ)` with
/// `m` the companion in block coordinates.
fn translated(
    setup: &ManifoldSetup,
    transform: nalgebra::DMatrix<f64>,
    companion: Trajectory,
    first_interval: i64,
) -> Arc<BlockFn> {
    let base = setup.block_fn();
    let sched = setup.schedule().clone();
    let at = move |s: f64| -> DVector<f64> {
        // anchors are exact; prefer them at the anchor times
        let z = match sched.interval_index(s) {
            Ok(j) if j >= first_interval && sched.zeta(j) == s => companion.anchors.get(&j).cloned(),
            _ => None,
        };
        &transform * z.unwrap_or_else(|| companion.eval(s).expect("companion covers the graph grid"))
    };
    Arc::new(move |s, y, yb, zeta| {
        let (m, mb) = (at(s), at(zeta));
        base(s, &(y + &m), &(yb + &mb), zeta) - base(s, &m, &mb, zeta)
    })
}
