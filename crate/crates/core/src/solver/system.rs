use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Nonlinearity `f(t, z, w)`, where `w` stands for the anchored state `z(β(t))`.
pub type Nonlinearity = dyn Fn(f64, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync;

/// Nonlinearity that also receives the anchor time `β(t)` as a fourth
/// argument. The solver passes the anchor of the interval being integrated,
/// which stays correct at the right endpoint where `β` itself jumps.
pub type AnchoredNonlinearity = dyn Fn(f64, &DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync;

/// Quasilinear system `z' = A z + f(t, z, z(β(t)))`.
#[derive(Clone)]
pub struct HybridSystem {
    a: DMatrix<f64>,
    f: Arc<AnchoredNonlinearity>,
    lipschitz: f64,
}

impl fmt::Debug for HybridSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HybridSystem")
            .field("a", &self.a)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

/// Radius of the ball in which the Lipschitz constant is probed at construction.
pub const PROBE_RADIUS: f64 = 1.0;
const PROBE_COUNT: usize = 200;
const PROBE_SEED: u64 = 0x5eed;

impl HybridSystem {
    /// Builds a system and spot-checks `f(t, 0, 0) = 0` and the declared
    /// Lipschitz constant on random probes in the unit ball.
    pub fn new<F>(a: DMatrix<f64>, lipschitz: f64, f: F) -> Result<Self>
    where
        F: Fn(f64, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self::new_anchored(a, lipschitz, move |t, z, w, _| f(t, z, w))
    }

    /// As [`HybridSystem::new`] for a nonlinearity that reads the anchor time.
    /// Probes use `β(t) = t`.
    pub fn new_anchored<F>(a: DMatrix<f64>, lipschitz: f64, f: F) -> Result<Self>
    where
        F: Fn(f64, &DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync + 'static,
    {
        let sys = Self::from_arc(a, lipschitz, Arc::new(f))?;
        let n = sys.dim();
        let zero = DVector::zeros(n);
        for j in 0..=20 {
            let t = -10.0 + j as f64;
            let v = sys.f(t, &zero, &zero);
            if v.len() != n {
                return Err(Error::InvalidSystem(format!(
                    "nonlinearity returned length {} for dimension {n}",
                    v.len()
                )));
            }
            if v.amax() > 1e-12 {
                return Err(Error::InvalidSystem(format!("f(t, 0, 0) = {v:?} at t = {t}")));
            }
        }
        let observed = sys.sampled_lipschitz(PROBE_COUNT, PROBE_RADIUS, PROBE_SEED);
        if observed > lipschitz * (1.0 + 1e-6) + 1e-12 {
            return Err(Error::InvalidSystem(format!(
                "sampled Lipschitz ratio {observed} exceeds declared constant {lipschitz}"
            )));
        }
        Ok(sys)
    }

    /// Builds a system without probing the nonlinearity. Used for derived
    /// systems whose nonlinearity is only defined on a bounded box.
    pub fn new_unchecked<F>(a: DMatrix<f64>, lipschitz: f64, f: F) -> Result<Self>
    where
        F: Fn(f64, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self::from_arc(a, lipschitz, Arc::new(move |t, z, w, _| f(t, z, w)))
    }

    /// Unchecked variant of [`HybridSystem::new_anchored`].
    pub fn new_anchored_unchecked<F>(a: DMatrix<f64>, lipschitz: f64, f: F) -> Result<Self>
    where
        F: Fn(f64, &DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync + 'static,
    {
        Self::from_arc(a, lipschitz, Arc::new(f))
    }

    pub(crate) fn from_arc(a: DMatrix<f64>, lipschitz: f64, f: Arc<AnchoredNonlinearity>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::InvalidSystem(format!(
                "linear part must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSystem("non-finite entry in linear part".into()));
        }
        if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
            return Err(Error::InvalidSystem(format!("Lipschitz constant {lipschitz} must be >= 0")));
        }
        Ok(Self { a, f, lipschitz })
    }

    /// `z' = A z` (no nonlinearity, `l = 0`).
    pub fn linear(a: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        Self::new_unchecked(a, 0.0, move |_, _, _| DVector::zeros(n))
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn nonlinearity(&self) -> Arc<AnchoredNonlinearity> {
        Arc::clone(&self.f)
    }

    /// `f(t, z, w)` with the anchor time taken as `t`.
    pub fn f(&self, t: f64, z: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        (self.f)(t, z, w, t)
    }

    /// `f(t, z, w)` on an interval whose anchor time is `zeta`.
    pub fn f_anchored(&self, t: f64, z: &DVector<f64>, w: &DVector<f64>, zeta: f64) -> DVector<f64> {
        (self.f)(t, z, w, zeta)
    }

    /// Right-hand side `A z + f(t, z, w)` on an interval anchored at `zeta`.
    pub fn rhs(&self, t: f64, z: &DVector<f64>, w: &DVector<f64>, zeta: f64) -> DVector<f64> {
        &self.a * z + (self.f)(t, z, w, zeta)
    }

    /// Largest observed `‖f(t,z₁,w₁) − f(t,z₂,w₂)‖ / (‖z₁−z₂‖ + ‖w₁−w₂‖)` over
    /// random pairs in the ball of the given radius and `t ∈ [-10, 10]`.
    pub fn sampled_lipschitz(&self, probes: usize, radius: f64, seed: u64) -> f64 {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let point = |rng: &mut ChaCha8Rng| {
            let v: DVector<f64> = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let scale = radius * rng.random::<f64>() / v.norm().max(1e-300);
            v * scale
        };
        let mut worst = 0.0_f64;
        for _ in 0..probes {
            let t = rng.random_range(-10.0..10.0);
            let (z1, w1) = (point(&mut rng), point(&mut rng));
            // half the probes are close pairs, which see the local slope
            let (z2, w2) = if rng.random::<bool>() {
                let dz = point(&mut rng) * 1e-3;
                let dw = point(&mut rng) * 1e-3;
                (&z1 + dz, &w1 + dw)
            } else {
                (point(&mut rng), point(&mut rng))
            };
            let den = (&z1 - &z2).norm() + (&w1 - &w2).norm();
            if den < 1e-14 {
                continue;
            }
            let num = (self.f(t, &z1, &w1) - self.f(t, &z2, &w2)).norm();
            worst = worst.max(num / den);
        }
        worst
    }
}
