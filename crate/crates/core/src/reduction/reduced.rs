//! The equation restricted to the center surface `u = G(t, v)`.

use std::sync::{Arc, Mutex};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{concat, split_at};
use crate::manifolds::CenterGraphCache;
use crate::solver::{AnchoredNonlinearity, HybridSystem};

/// Reduced system on the center coordinates plus the cache it reads.
///
/// The nonlinearity cannot return errors, so a lookup outside the cached box
/// is clamped to the box and the first such failure is kept in `failure`.
#[derive(Clone)]
pub struct ReducedSystem {
    pub system: HybridSystem,
    pub cache: Arc<CenterGraphCache>,
    failure: Arc<Mutex<Option<Error>>>,
}

impl std::fmt::Debug for ReducedSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReducedSystem")
            .field("dim", &self.system.dim())
            .field("lipschitz", &self.system.lipschitz())
            .field("failure", &self.failure())
            .finish_non_exhaustive()
    }
}

impl ReducedSystem {
    /// First box exit (or other lookup failure) seen by the nonlinearity.
    pub fn failure(&self) -> Option<Error> {
        self.failure.lock().unwrap().clone()
    }

    pub fn clear_failure(&self) {
        *self.failure.lock().unwrap() = None;
    }
}

/// Builds `v' = B₋ v + [T f(t, V(G(t,v), v), V(G(ζ,v̄), v̄))]₋`.
///
/// The Lipschitz constant is `l̂(1 + P l̂)` with `P` the theoretical graph
/// factor, or `empirical_p` when given.
pub fn build_reduced(cache: Arc<CenterGraphCache>, empirical_p: Option<f64>) -> Result<ReducedSystem> {
    let setup = cache.setup();
    let split = setup.split();
    let k = split.k;
    let c = split.center_dim();
    if c == 0 {
        return Err(Error::DegenerateDimension("every direction is stable; the reduced system is empty".into()));
    }
    let l = setup.block_lipschitz();
    let p = empirical_p.unwrap_or(setup.shifted().p_graph);
    let lipschitz = l * (1.0 + p * l);

    let failure: Arc<Mutex<Option<Error>>> = Arc::new(Mutex::new(None));
    let block = setup.block_fn();
    let lookup = {
        let cache = Arc::clone(&cache);
        let failure = Arc::clone(&failure);
        let w = cache.options().half_width;
        move |t: f64, v: &DVector<f64>| -> DVector<f64> {
            match cache.eval(t, v) {
                Ok(u) => u,
                Err(e) => {
                    failure.lock().unwrap().get_or_insert(e);
                    let clamped = v.map(|x| x.clamp(-w, w));
                    cache.eval(t, &clamped).unwrap_or_else(|_| DVector::zeros(k))
                }
            }
        }
    };
    let f: Arc<AnchoredNonlinearity> = Arc::new(move |t, v, vb, zeta| {
        let y = concat(&lookup(t, v), v);
        let yb = concat(&lookup(zeta, vb), vb);
        split_at(&block(t, &y, &yb, zeta), k).1
    });
    let system = HybridSystem::from_arc(split.b_minus.clone(), lipschitz, f)?;
    Ok(ReducedSystem { system, cache, failure })
}
