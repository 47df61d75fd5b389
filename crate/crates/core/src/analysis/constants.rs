//! Explicit constants of the existence and manifold theory.

use nalgebra::DMatrix;
use serde::Serialize;

use super::spectral::SpectralSplit;
use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::schedule::ArgumentSchedule;

/// Margin below which a passing inequality is reported as near its boundary.
pub const NEAR_BOUNDARY: f64 = 0.1;

/// One smallness inequality `lhs < rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// Passes with relative margin under [`NEAR_BOUNDARY`].
    pub near_boundary: bool,
}

impl Inequality {
    fn new(lhs: f64, rhs: f64) -> Self {
        let pass = lhs < rhs;
        Self { lhs, rhs, pass, near_boundary: pass && lhs > (1.0 - NEAR_BOUNDARY) * rhs }
    }
}

/// Every constant derived from `A`, the schedule gap, `l` and `α`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsBundle {
    /// Exponent with `‖e^{At}‖ ≤ e^{Ω|t|}`.
    pub omega: f64,
    pub m_up: f64,
    pub m_low: f64,
    pub theta: f64,
    pub lipschitz: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub k_const: f64,
    pub m_pow: usize,
    pub gamma: f64,
    pub p_const: f64,
    /// `2Mlθ`, the contraction factor of the anchor iteration.
    pub contraction: f64,
    pub c5: [Inequality; 3],
    /// `2pl < 1`.
    pub c10: Inequality,
}

impl ConstantsBundle {
    pub fn c5_pass(&self) -> [bool; 3] {
        self.c5.map(|q| q.pass)
    }

    pub fn c5_all(&self) -> bool {
        self.c5.iter().all(|q| q.pass)
    }

    pub fn c10_pass(&self) -> bool {
        self.c10.pass
    }

    /// Theoretical Lipschitz bound `pKl` of the stable graph map.
    pub fn stable_graph_lipschitz(&self) -> f64 {
        self.p_const * self.k_const * self.lipschitz
    }
}

/// `∫₀^∞ (1 + t^m) e^{−αt} dt = 1/α + m!/α^{m+1}`.
pub fn gamma_integral(alpha: f64, m_pow: usize) -> f64 {
    let factorial: f64 = (1..=m_pow).map(|j| j as f64).product();
    1.0 / alpha + factorial / alpha.powi(m_pow as i32 + 1)
}

/// `K(1 + e^{αθ})[1/(σ−α) + γ]`.
pub fn p_constant(k_const: f64, alpha: f64, theta: f64, sigma: f64, gamma: f64) -> f64 {
    k_const * (1.0 + (alpha * theta).exp()) * (1.0 / (sigma - alpha) + gamma)
}

/// Fills the bundle; `alpha` must lie in `(0, σ)`.
pub fn compute_constants(
    a: &DMatrix<f64>,
    split: &SpectralSplit,
    sched: &ArgumentSchedule,
    lipschitz: f64,
    alpha: f64,
) -> Result<ConstantsBundle> {
    if !(alpha > 0.0 && alpha < split.sigma) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("{alpha} must lie in (0, sigma = {})", split.sigma),
        });
    }
    if !(lipschitz >= 0.0) {
        return Err(Error::InvalidParameter { name: "lipschitz", reason: format!("{lipschitz} must be >= 0") });
    }
    let theta = sched.theta_bound();
    let omega = spectral_norm(a);
    let m_up = (omega * theta).exp();
    let m_low = (-omega * theta).exp();
    let gamma = gamma_integral(alpha, split.m_pow);
    let p_const = p_constant(split.k_const, alpha, theta, split.sigma, gamma);

    let q = m_up * lipschitz * theta;
    let qe = q * q.exp();
    let third = if qe < 1.0 { m_up * m_up * lipschitz * theta * ((qe + 1.0) / (1.0 - qe) + qe) } else { f64::INFINITY };
    let c5 = [Inequality::new(qe, 1.0), Inequality::new(2.0 * q, 1.0), Inequality::new(third, m_low)];
    let c10 = Inequality::new(2.0 * p_const * lipschitz, 1.0);

    Ok(ConstantsBundle {
        omega,
        m_up,
        m_low,
        theta,
        lipschitz,
        alpha,
        sigma: split.sigma,
        k_const: split.k_const,
        m_pow: split.m_pow,
        gamma,
        p_const,
        contraction: 2.0 * q,
        c5,
        c10,
    })
}

/// Default `α = σ/2`.
pub fn default_alpha(split: &SpectralSplit) -> f64 {
    split.sigma / 2.0
}
