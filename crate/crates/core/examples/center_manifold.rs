//! The center graph `G(ζ, d)` through the exponential shift, tabulated.

use epcag::analysis::{compute_constants, default_alpha, spectral_split};
use epcag::harness::{build_system, NonlinearitySpec};
use epcag::manifolds::{graph_table, GraphKind, ManifoldOptions, ManifoldSetup};
use epcag::schedule::ArgumentSchedule;
use nalgebra::dmatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (sys, _) = build_system(dmatrix![-1.0, 0.0; 0.0, 0.0], &NonlinearitySpec::new("damped-cubic"), None)?;
    let sched = ArgumentSchedule::epca(-150, 10)?;
    let split = spectral_split(sys.a(), 1e-9)?;
    let bundle = compute_constants(sys.a(), &split, &sched, sys.lipschitz(), default_alpha(&split))?;
    let setup = ManifoldSetup::new(&sys, &sched, &split, &bundle, &ManifoldOptions::default())?;
    println!("shifted constants {:?}", setup.shifted());

    let table = graph_table(&setup, GraphKind::Center, 0.0, 1.0, 9)?;
    print!("{}", table.to_csv());
    println!("largest difference quotient {:.3e} (bound {:.3e})", table.max_lipschitz_ratio(), table.lipschitz_bound);
    Ok(())
}
