//! Stability of a 2D system read off its one-dimensional reduction.

use std::sync::Arc;

use epcag::analysis::{compute_constants, default_alpha, spectral_split};
use epcag::harness::{build_system, NonlinearitySpec};
use epcag::manifolds::{CacheOptions, CenterGraphCache, ManifoldOptions, ManifoldSetup};
use epcag::reduction::{reduction_check, StabilityOptions};
use epcag::schedule::ArgumentSchedule;
use nalgebra::dmatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sched = ArgumentSchedule::epca(-200, 3400)?;
    let mut stability = StabilityOptions {
        radii: vec![0.4, 0.2],
        horizon: Some(3200.0),
        t0_count: 2,
        random_directions: 4,
        decay_fraction: 0.5,
        ..Default::default()
    };
    stability.solver.step = 0.25;
    let cache_opts = CacheOptions { half_width: 6.0, resolution: 121, time_nodes: 4, autonomous: true };
    let manifold = ManifoldOptions { step: 0.1, tol: 1e-9, ..Default::default() };

    for family in ["damped-cubic", "anti-damped-cubic", "zero"] {
        let (sys, _) = build_system(dmatrix![-1.0, 0.0; 0.0, 0.0], &NonlinearitySpec::new(family), None)?;
        let split = spectral_split(sys.a(), 1e-9)?;
        let bundle = compute_constants(sys.a(), &split, &sched, sys.lipschitz(), default_alpha(&split))?;
        let setup = ManifoldSetup::new(&sys, &sched, &split, &bundle, &manifold)?;
        let cache = Arc::new(CenterGraphCache::new(setup, cache_opts)?);
        let check = reduction_check(&sys, cache, &stability)?;
        println!(
            "{family:<18} full {:<22} reduced {:<22} agree {}",
            check.full.classification.to_string(),
            check.reduced.classification.to_string(),
            check.agree
        );
    }
    Ok(())
}
