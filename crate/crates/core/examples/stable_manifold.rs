//! The stable graph `F(ζ, c)` and the decay of the solutions it selects.

use epcag::analysis::{compute_constants, default_alpha, spectral_split};
use epcag::harness::{build_system, NonlinearitySpec};
use epcag::manifolds::{verify_surface_invariance, ManifoldOptions, ManifoldSetup};
use epcag::schedule::ArgumentSchedule;
use epcag::solver::SolverOptions;
use nalgebra::{dmatrix, dvector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = NonlinearitySpec::new("tanh-coupled").with("eps", 0.01);
    let (sys, _) = build_system(dmatrix![-1.0, 0.0; 0.0, 0.0], &spec, None)?;
    let sched = ArgumentSchedule::epca(-20, 60)?;
    let split = spectral_split(sys.a(), 1e-9)?;
    let bundle = compute_constants(sys.a(), &split, &sched, sys.lipschitz(), default_alpha(&split))?;
    let setup = ManifoldSetup::new(&sys, &sched, &split, &bundle, &ManifoldOptions::default())?;

    for c in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let f = setup.eval_f(0.0, &dvector![c])?;
        println!(
            "F(0, {c:>5.2}) = {:>12.3e}   iterates {:>2}   envelope ratio {:.3}",
            f.value[0], f.iterates, f.envelope_ratio
        );
    }
    let inv = verify_surface_invariance(&sys, &setup, 0, &dvector![0.8], 5, 0.1, &SolverOptions::default())?;
    println!("invariance defects {:?} (threshold {:.2e})", inv.defects, inv.threshold());
    println!("off-surface run keeps |v| >= {:.4}", inv.off_surface_min_center);
    Ok(())
}
