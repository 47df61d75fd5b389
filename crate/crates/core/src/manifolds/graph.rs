//! Stable graph `F` and center graph `G` in block coordinates.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::picard::{iterate, BlockFn, TwoBlockProblem};
use crate::analysis::{shifted_growth_constant, ConstantsBundle, SpectralSplit};
use crate::error::{Error, Result};
use crate::linalg::{concat, expm_t, split_at};
use crate::schedule::ArgumentSchedule;
use crate::solver::HybridSystem;

/// Controls for the graph computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifoldOptions {
    /// Largest quadrature panel.
    pub step: f64,
    /// Sup-norm stopping threshold of the Picard iteration.
    pub tol: f64,
    pub max_iter: usize,
    /// Truncation length for `F`; default `ln(K/tol)/σ`.
    pub horizon: Option<f64>,
    /// Truncation length for `G`; default `ln(K̄/tol)/κ̄`.
    pub horizon_center: Option<f64>,
    /// Exponential shift for `G`; default `σ/2`.
    pub kappa: Option<f64>,
    /// Refuse to iterate when the smallness inequality fails.
    pub enforce_smallness: bool,
}

impl Default for ManifoldOptions {
    fn default() -> Self {
        Self {
            step: 0.05,
            tol: 1e-10,
            max_iter: 200,
            horizon: None,
            horizon_center: None,
            kappa: None,
            enforce_smallness: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Stable,
    Center,
}

/// Constants of the shifted (center) construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftedConstants {
    pub kappa: f64,
    /// Decay rate `κ̄ < κ` of the shifted blocks.
    pub kappa_bar: f64,
    pub alpha1: f64,
    pub k_bar: f64,
    pub p_bar: f64,
    /// Lipschitz constant of the shifted nonlinearity, `l̂ e^{κθ}`.
    pub lipschitz: f64,
    /// `2 p̄ l̄`, must stay below one.
    pub smallness: f64,
    /// Theoretical Lipschitz factor `P` with `‖G(d₁) − G(d₂)‖ ≤ P l ‖d₁ − d₂‖`.
    pub p_graph: f64,
}

/// Result of one graph evaluation with its Picard diagnostics and the
/// solution it belongs to, sampled in block coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldApprox {
    pub kind: GraphKind,
    pub anchor_time: f64,
    pub horizon: f64,
    pub iterates: usize,
    pub deltas: Vec<f64>,
    /// Theoretical Lipschitz bound of the graph map (`pKl` or `Pl`).
    pub lipschitz_bound: f64,
    /// Graph value: `F(t, c)` for stable, `G(t, d)` for center.
    pub value: DVector<f64>,
    pub ts: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// Largest ratio of `‖y(t)‖` to the theoretical decay envelope.
    pub envelope_ratio: f64,
}

impl ManifoldApprox {
    pub fn last_delta(&self) -> f64 {
        self.deltas.last().copied().unwrap_or(0.0)
    }

    /// The solution samples never exceeded the decay envelope.
    pub fn envelope_holds(&self) -> bool {
        self.envelope_ratio <= 1.0 + 1e-9
    }

    /// Samples mapped back to original coordinates.
    pub fn original_states(&self, split: &SpectralSplit) -> Vec<DVector<f64>> {
        self.states.iter().map(|y| &split.inverse * y).collect()
    }
}

/// Everything needed to evaluate `F` and `G` repeatedly for one system.
#[derive(Clone)]
pub struct ManifoldSetup {
    sched: ArgumentSchedule,
    split: SpectralSplit,
    bundle: ConstantsBundle,
    opts: ManifoldOptions,
    block: Arc<BlockFn>,
    block_lipschitz: f64,
    shifted: ShiftedConstants,
}

impl std::fmt::Debug for ManifoldSetup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManifoldSetup")
            .field("k", &self.split.k)
            .field("block_lipschitz", &self.block_lipschitz)
            .field("shifted", &self.shifted)
            .finish_non_exhaustive()
    }
}

impl ManifoldSetup {
    /// Moves the system to block coordinates `y = T z`, where the
    /// nonlinearity becomes `T f(t, T⁻¹y, T⁻¹ŷ)` with Lipschitz constant
    /// `l · cond(T)`, and derives the shifted constants for `G`.
    pub fn new(
        sys: &HybridSystem,
        sched: &ArgumentSchedule,
        split: &SpectralSplit,
        bundle: &ConstantsBundle,
        opts: &ManifoldOptions,
    ) -> Result<Self> {
        if split.dim() != sys.dim() {
            return Err(Error::InvalidParameter { name: "split", reason: "dimension does not match the system".into() });
        }
        if !(opts.step > 0.0 && opts.tol > 0.0 && opts.max_iter > 0) {
            return Err(Error::InvalidParameter { name: "manifold", reason: "step, tol and max_iter must be positive".into() });
        }
        let f = sys.nonlinearity();
        let t = split.transform.clone();
        let v = split.inverse.clone();
        let block: Arc<BlockFn> = Arc::new(move |time, y, yb, zeta| &t * f(time, &(&v * y), &(&v * yb), zeta));
        let block_lipschitz = sys.lipschitz() * split.condition();
        let shifted = shifted_constants(split, sched.theta_bound(), block_lipschitz, opts.kappa)?;
        Ok(Self {
            sched: sched.clone(),
            split: split.clone(),
            bundle: bundle.clone(),
            opts: *opts,
            block,
            block_lipschitz,
            shifted,
        })
    }

    pub fn split(&self) -> &SpectralSplit {
        &self.split
    }

    pub fn bundle(&self) -> &ConstantsBundle {
        &self.bundle
    }

    pub fn schedule(&self) -> &ArgumentSchedule {
        &self.sched
    }

    pub fn options(&self) -> &ManifoldOptions {
        &self.opts
    }

    pub fn shifted(&self) -> &ShiftedConstants {
        &self.shifted
    }

    /// Lipschitz constant of the block-coordinate nonlinearity.
    pub fn block_lipschitz(&self) -> f64 {
        self.block_lipschitz
    }

    /// `2 p l̂`, the smallness quantity of the stable construction.
    pub fn stable_smallness(&self) -> f64 {
        2.0 * self.bundle.p_const * self.block_lipschitz
    }

    /// `p K l̂`.
    pub fn stable_lipschitz_bound(&self) -> f64 {
        self.bundle.p_const * self.bundle.k_const * self.block_lipschitz
    }

    /// `P l̂`.
    pub fn center_lipschitz_bound(&self) -> f64 {
        self.shifted.p_graph * self.block_lipschitz
    }

    pub fn stable_horizon(&self) -> f64 {
        self.opts.horizon.unwrap_or_else(|| (self.bundle.k_const / self.opts.tol).ln().max(1.0) / self.split.sigma)
    }

    pub fn center_horizon(&self) -> f64 {
        self.opts
            .horizon_center
            .unwrap_or_else(|| (self.shifted.k_bar / self.opts.tol).ln().max(1.0) / self.shifted.kappa_bar)
    }

    pub(crate) fn block_fn(&self) -> Arc<BlockFn> {
        Arc::clone(&self.block)
    }

    /// `F(t, c)`: the center coordinates at `t` of the solution through
    /// `u(t) = c` that decays forward.
    pub fn eval_f(&self, t: f64, c: &DVector<f64>) -> Result<ManifoldApprox> {
        self.stable_graph_with(self.block_fn(), t, c, self.stable_horizon(), StartGuess::Zero)
    }

    /// [`ManifoldSetup::eval_f`] with a non-default truncation length.
    pub fn eval_f_with_horizon(&self, t: f64, c: &DVector<f64>, horizon: f64) -> Result<ManifoldApprox> {
        self.stable_graph_with(self.block_fn(), t, c, horizon, StartGuess::Zero)
    }

    /// [`ManifoldSetup::eval_f`] started from the linear flow instead of zero.
    pub fn eval_f_from_linear_flow(&self, t: f64, c: &DVector<f64>) -> Result<ManifoldApprox> {
        self.stable_graph_with(self.block_fn(), t, c, self.stable_horizon(), StartGuess::LinearFlow)
    }

    pub(crate) fn stable_graph_with(
        &self,
        g: Arc<BlockFn>,
        t: f64,
        c: &DVector<f64>,
        horizon: f64,
        guess: StartGuess,
    ) -> Result<ManifoldApprox> {
        let k = self.split.k;
        if c.len() != k {
            return Err(Error::InvalidParameter { name: "c", reason: format!("expected length {k}, got {}", c.len()) });
        }
        if self.opts.enforce_smallness && self.stable_smallness() >= 1.0 {
            return Err(Error::SmallnessViolated(format!("2 p l = {:.4} >= 1", self.stable_smallness())));
        }
        let i = self.sched.interval_index(t)?;
        let lo = t.min(self.sched.zeta(i));
        let end = self.theta_at_or_after(t + horizon)?;
        let grid = Grid::build(&self.sched, lo, end, &[t], self.opts.step)?;
        let anchor = grid.node_at(t).expect("anchor time is a breakpoint");
        let n = self.split.dim();
        let init = match guess {
            StartGuess::Zero => vec![DVector::zeros(n); grid.len()],
            StartGuess::LinearFlow => grid
                .ts
                .iter()
                .map(|&s| concat(&(expm_t(&self.split.b_plus, s - t) * c), &DVector::zeros(n - k)))
                .collect(),
        };
        let problem = TwoBlockProblem {
            grid: &grid,
            first: &self.split.b_plus,
            second: &self.split.b_minus,
            g,
            first_pin: (anchor, c.clone()),
            second_pin: (grid.len() - 1, DVector::zeros(n - k)),
        };
        let out = iterate(&problem, init, self.opts.tol, self.opts.max_iter)?;
        let value = split_at(&out.states[anchor], k).1;
        let scale = 2.0 * self.bundle.k_const * c.norm();
        let envelope_ratio = envelope_ratio(&grid.ts, &out.states, |s| scale * (-self.bundle.alpha * (s - t)).exp());
        Ok(ManifoldApprox {
            kind: GraphKind::Stable,
            anchor_time: t,
            horizon: end - t,
            iterates: out.deltas.len(),
            deltas: out.deltas,
            lipschitz_bound: self.stable_lipschitz_bound(),
            value,
            ts: grid.ts,
            states: out.states,
            envelope_ratio,
        })
    }

    /// `G(t, d)`: the stable coordinates at `t` of the solution through
    /// `v(t) = d` that stays small backward.
    ///
    /// Works with `η(s) = y(s) e^{κ(s − t)}`, which turns the center block
    /// into an unstable one; measuring the shift from `t` itself makes the
    /// back-transformation the identity at the anchor time.
    pub fn eval_g(&self, t: f64, d: &DVector<f64>) -> Result<ManifoldApprox> {
        let k = self.split.k;
        let n = self.split.dim();
        if d.len() != n - k {
            return Err(Error::InvalidParameter { name: "d", reason: format!("expected length {}, got {}", n - k, d.len()) });
        }
        if self.opts.enforce_smallness && self.shifted.smallness >= 1.0 {
            return Err(Error::SmallnessViolated(format!(
                "shifted 2 p l = {:.4} >= 1 (kappa = {})",
                self.shifted.smallness, self.shifted.kappa
            )));
        }
        let horizon = self.center_horizon();
        let i = self.sched.interval_index(t)?;
        let hi = t.max(self.sched.zeta(i));
        let start = self.theta_at_or_before(t - horizon)?;
        let grid = Grid::build(&self.sched, start, hi, &[t], self.opts.step)?;
        let anchor = grid.node_at(t).expect("anchor time is a breakpoint");

        let kappa = self.shifted.kappa;
        let base = self.block_fn();
        let shifted: Arc<BlockFn> = Arc::new(move |s, eta, eta_b, zeta| {
            let up = (kappa * (s - t)).exp();
            base(s, &(eta / up), &(eta_b * (-kappa * (zeta - t)).exp()), zeta) * up
        });
        let id_k = DMatrix::<f64>::identity(k, k) * kappa;
        let id_c = DMatrix::<f64>::identity(n - k, n - k) * kappa;
        let first = &self.split.b_plus + id_k;
        let second = &self.split.b_minus + id_c;
        let problem = TwoBlockProblem {
            grid: &grid,
            first: &first,
            second: &second,
            g: shifted,
            first_pin: (0, DVector::zeros(k)),
            second_pin: (anchor, d.clone()),
        };
        let out = iterate(&problem, vec![DVector::zeros(n); grid.len()], self.opts.tol, self.opts.max_iter)?;
        let value = split_at(&out.states[anchor], k).0;
        let states: Vec<DVector<f64>> =
            grid.ts.iter().zip(&out.states).map(|(&s, eta)| eta * (-kappa * (s - t)).exp()).collect();
        let rate = kappa - self.shifted.alpha1;
        let scale = 2.0 * self.shifted.k_bar * d.norm();
        let envelope_ratio = envelope_ratio(&grid.ts, &states, |s| scale * (rate * (t - s)).exp());
        Ok(ManifoldApprox {
            kind: GraphKind::Center,
            anchor_time: t,
            horizon: t - start,
            iterates: out.deltas.len(),
            deltas: out.deltas,
            lipschitz_bound: self.center_lipschitz_bound(),
            value,
            ts: grid.ts,
            states,
            envelope_ratio,
        })
    }

    fn theta_at_or_after(&self, t: f64) -> Result<f64> {
        let thetas = self.sched.thetas();
        let j = thetas.partition_point(|&th| th < t);
        thetas.get(j).copied().ok_or_else(|| {
            let (lo, hi) = self.sched.span();
            Error::WindowExceeded { t, lo, hi }
        })
    }

    fn theta_at_or_before(&self, t: f64) -> Result<f64> {
        let thetas = self.sched.thetas();
        let j = thetas.partition_point(|&th| th <= t);
        if j == 0 {
            let (lo, hi) = self.sched.span();
            return Err(Error::WindowExceeded { t, lo, hi });
        }
        Ok(thetas[j - 1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StartGuess {
    Zero,
    LinearFlow,
}

fn envelope_ratio(ts: &[f64], states: &[DVector<f64>], bound: impl Fn(f64) -> f64) -> f64 {
    ts.iter()
        .zip(states)
        .map(|(&s, y)| {
            let norm = y.norm();
            if norm <= 1e-14 {
                0.0
            } else {
                norm / bound(s)
            }
        })
        .fold(0.0, f64::max)
}

/// `κ = σ/2`, `κ̄ = 0.9κ`, `α₁ = κ̄/2`, `K̄` from the shifted blocks, and
/// `p̄ = K̄(1 + e^{α₁θ})[1/(κ̄+α₁) + 1/(κ̄−α₁)]`.
fn shifted_constants(
    split: &SpectralSplit,
    theta: f64,
    block_lipschitz: f64,
    kappa: Option<f64>,
) -> Result<ShiftedConstants> {
    let sigma = split.sigma;
    let kappa = kappa.unwrap_or(sigma / 2.0);
    if !(kappa > 0.0 && kappa < sigma) {
        return Err(Error::InvalidParameter { name: "kappa", reason: format!("{kappa} must lie in (0, {sigma})") });
    }
    let kappa_bar = 0.9 * kappa.min(sigma - kappa);
    let alpha1 = kappa_bar / 2.0;
    let k = split.k;
    let n = split.dim();
    let first = &split.b_plus + DMatrix::<f64>::identity(k, k) * kappa;
    let second = &split.b_minus + DMatrix::<f64>::identity(n - k, n - k) * kappa;
    let k_bar = shifted_growth_constant(&first, &second, kappa_bar, (40.0 / kappa_bar).clamp(10.0, 400.0));
    let p_bar = k_bar * (1.0 + (alpha1 * theta).exp()) * (1.0 / (kappa_bar + alpha1) + 1.0 / (kappa_bar - alpha1));
    let lipschitz = block_lipschitz * (kappa * theta).exp();
    Ok(ShiftedConstants {
        kappa,
        kappa_bar,
        alpha1,
        k_bar,
        p_bar,
        lipschitz,
        smallness: 2.0 * p_bar * lipschitz,
        p_graph: p_bar * k_bar * (kappa * theta).exp(),
    })
}
