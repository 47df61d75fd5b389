//! Sampled Lyapunov stability of the zero solution.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::ArgumentSchedule;
use crate::solver::{march_forward, HybridSystem, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Unstable,
    Stable,
    AsymptoticallyStable,
    Exponential,
}

impl Classification {
    /// Collapses the exponential refinement, which a center system cannot
    /// exhibit.
    pub fn coarse(self) -> Self {
        match self {
            Self::Exponential => Self::AsymptoticallyStable,
            other => other,
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Unstable => "unstable",
            Self::Stable => "stable",
            Self::AsymptoticallyStable => "asymptotically-stable",
            Self::Exponential => "exponential",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityOptions {
    pub radii: Vec<f64>,
    /// Simulated length after each start; default twenty times the largest
    /// interval.
    pub horizon: Option<f64>,
    /// Start times; default the latest `t0_count` anchor times that leave
    /// room for the horizon.
    pub t0: Option<Vec<f64>>,
    pub t0_count: usize,
    /// Random unit directions added to the `±` axis directions.
    pub random_directions: usize,
    pub seed: u64,
    /// A run escapes once its norm passes `escape_factor · δ`.
    pub escape_factor: f64,
    /// Stable means every run stays within `bound_factor · δ`.
    pub bound_factor: f64,
    /// Asymptotic stability needs final norms below `decay_fraction · δ`.
    pub decay_fraction: f64,
    /// Least `R²` of the log-linear envelope fit for an exponential verdict.
    pub fit_r2: f64,
    /// Largest relative disagreement of the rates fitted on the last two
    /// quarters of the horizon.
    pub rate_consistency: f64,
    pub solver: SolverOptions,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self {
            radii: vec![1e-1, 1e-2, 1e-3],
            horizon: None,
            t0: None,
            t0_count: 5,
            random_directions: 8,
            seed: 0,
            escape_factor: 10.0,
            bound_factor: 3.0,
            decay_fraction: 0.01,
            fit_r2: 0.98,
            rate_consistency: 0.15,
            solver: SolverOptions::default(),
        }
    }
}

/// Worst case over all directions for one start time and radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub t0: f64,
    pub radius: f64,
    pub max_excursion: f64,
    pub final_norm: f64,
    /// Time actually simulated; shorter than requested after an escape.
    pub horizon: f64,
    pub escaped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub classification: Classification,
    /// Slowest fitted decay rate when the verdict is exponential.
    pub rate: Option<f64>,
    /// Some excursion passed the bound factor without escaping.
    pub marginal: bool,
    pub evidence: Vec<Evidence>,
    pub t0_sweep: Vec<f64>,
}

struct Run {
    excursion: f64,
    final_norm: f64,
    reached: f64,
    escaped: bool,
    samples: Vec<(f64, f64)>,
}

/// Integrates a star of starts on each sphere `‖z0‖ = δ` from each start
/// time and classifies the zero solution from the worst excursions and
/// final norms.
pub fn classify_stability(
    sys: &HybridSystem,
    sched: &ArgumentSchedule,
    opts: &StabilityOptions,
) -> Result<StabilityVerdict> {
    if opts.radii.is_empty() || opts.radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidParameter { name: "radii", reason: "need at least one positive radius".into() });
    }
    if !(opts.escape_factor >= opts.bound_factor && opts.bound_factor >= 1.0) {
        return Err(Error::InvalidParameter { name: "escape_factor", reason: "need escape >= bound >= 1".into() });
    }
    let horizon = opts.horizon.unwrap_or(20.0 * sched.theta_bound());
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter { name: "horizon", reason: "must be positive".into() });
    }
    let t0s = start_times(sched, horizon, opts)?;
    let directions = directions(sys.dim(), opts.random_directions, opts.seed);

    let mut evidence = Vec::new();
    let mut runs_by_case = Vec::new();
    for &t0 in &t0s {
        for &delta in &opts.radii {
            let runs: Vec<Run> = directions
                .iter()
                .map(|dir| run(sys, sched, t0, &(dir * delta), horizon, opts.escape_factor * delta, &opts.solver))
                .collect::<Result<_>>()?;
            evidence.push(Evidence {
                t0,
                radius: delta,
                max_excursion: runs.iter().map(|r| r.excursion).fold(0.0, f64::max),
                final_norm: runs.iter().map(|r| r.final_norm).fold(0.0, f64::max),
                horizon: runs.iter().map(|r| r.reached - t0).fold(f64::INFINITY, f64::min),
                escaped: runs.iter().any(|r| r.escaped),
            });
            runs_by_case.push(runs);
        }
    }

    let escaped = evidence.iter().any(|e| e.escaped);
    let bounded = evidence.iter().all(|e| e.max_excursion <= opts.bound_factor * e.radius);
    let mut verdict = StabilityVerdict {
        classification: Classification::Unstable,
        rate: None,
        marginal: !escaped && !bounded,
        evidence,
        t0_sweep: t0s,
    };
    if escaped || !bounded {
        return Ok(verdict);
    }
    verdict.classification = Classification::Stable;
    if !verdict.evidence.iter().all(|e| e.final_norm <= opts.decay_fraction * e.radius) {
        return Ok(verdict);
    }
    verdict.classification = Classification::AsymptoticallyStable;
    let mut slowest = f64::INFINITY;
    for r in runs_by_case.iter().flatten() {
        match exponential_rate(&r.samples, opts.fit_r2, opts.rate_consistency) {
            Some(rate) => slowest = slowest.min(rate),
            None => return Ok(verdict),
        }
    }
    verdict.classification = Classification::Exponential;
    verdict.rate = Some(slowest);
    Ok(verdict)
}

fn start_times(sched: &ArgumentSchedule, horizon: f64, opts: &StabilityOptions) -> Result<Vec<f64>> {
    let (lo, hi) = sched.span();
    if let Some(t0) = &opts.t0 {
        if let Some(&bad) = t0.iter().find(|&&t| t < lo || t + horizon > hi) {
            return Err(Error::WindowExceeded { t: bad, lo, hi });
        }
        return Ok(t0.clone());
    }
    let fits: Vec<f64> = sched.zetas().iter().copied().filter(|&z| z + horizon <= hi && z < hi).collect();
    if fits.is_empty() {
        return Err(Error::WindowExceeded { t: lo + horizon, lo, hi });
    }
    Ok(fits[fits.len().saturating_sub(opts.t0_count.max(1))..].to_vec())
}

/// `±e_j` for every axis, then seeded uniform directions on the sphere
/// (rejection from the cube), without repeats.
fn directions(n: usize, random: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(2 * n + random);
    for j in 0..n {
        for sign in [1.0, -1.0] {
            let mut e = DVector::zeros(n);
            e[j] = sign;
            out.push(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < 2 * n + random {
        let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let norm: f64 = v.norm();
        if !(1e-6..=1.0).contains(&norm) {
            continue;
        }
        let v = v / norm;
        if out.iter().all(|d| (d - &v).norm() > 1e-9) {
            out.push(v);
        } else if n == 1 {
            break;
        }
    }
    out
}

fn run(
    sys: &HybridSystem,
    sched: &ArgumentSchedule,
    t0: f64,
    z0: &DVector<f64>,
    horizon: f64,
    escape: f64,
    solver: &SolverOptions,
) -> Result<Run> {
    let mut excursion = z0.norm();
    let mut final_norm = excursion;
    let mut samples = vec![(t0, excursion)];
    let mut escaped = false;
    let result = march_forward(sys, sched, t0, z0, t0 + horizon, solver, |t, z, peak| {
        excursion = excursion.max(peak);
        final_norm = z.norm();
        samples.push((t, final_norm));
        escaped = excursion > escape || !excursion.is_finite();
        !escaped
    });
    let reached = match result {
        Ok(t) => t,
        Err(Error::BlowUp { t_last, .. }) => {
            escaped = true;
            excursion = f64::INFINITY;
            t_last
        }
        Err(Error::NonContraction { interval, .. }) => {
            escaped = true;
            excursion = f64::INFINITY;
            sched.theta(interval)
        }
        Err(e) => return Err(e),
    };
    Ok(Run { excursion, final_norm, reached, escaped, samples })
}

/// Rate of `‖z(t)‖ ≈ C e^{−rate·t}` fitted to the running envelope
/// `sup_{s ≥ t} ‖z(s)‖` over the second half, accepted only when the fit is
/// tight and the last two quarters give nearly the same rate.
fn exponential_rate(samples: &[(f64, f64)], min_r2: f64, consistency: f64) -> Option<f64> {
    let mut envelope: Vec<(f64, f64)> = Vec::with_capacity(samples.len());
    let mut running: f64 = 0.0;
    for &(t, v) in samples.iter().rev() {
        running = running.max(v);
        envelope.push((t, running));
    }
    envelope.reverse();
    let (t_start, t_end) = (envelope.first()?.0, envelope.last()?.0);
    let window = |a: f64, b: f64| -> Vec<(f64, f64)> {
        let lo = t_start + a * (t_end - t_start);
        let hi = t_start + b * (t_end - t_start);
        envelope
            .iter()
            .filter(|p| p.0 >= lo - 1e-12 && p.0 <= hi + 1e-12 && p.1 > 1e-300)
            .map(|&(t, v)| (t, v.ln()))
            .collect()
    };
    let (slope, r2) = linear_fit(&window(0.5, 1.0))?;
    if r2 < min_r2 || slope >= 0.0 {
        return None;
    }
    let (q3, _) = linear_fit(&window(0.5, 0.75))?;
    let (q4, _) = linear_fit(&window(0.75, 1.0))?;
    if (q3 - q4).abs() > consistency * q3.abs().max(q4.abs()) {
        return None;
    }
    Some(-slope)
}

/// Least-squares slope and `R²`; `None` with fewer than three points or no
/// variation.
fn linear_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, sxy * sxy / (sxx * syy)))
}
