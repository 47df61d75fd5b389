//! Hypothesis table for a catalog system.

use epcag::analysis::{check_conditions, compute_constants, default_alpha, spectral_split};
use epcag::harness::{build_system, NonlinearitySpec};
use epcag::schedule::ArgumentSchedule;
use nalgebra::dmatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (sys, _) = build_system(dmatrix![-1.0, 0.0; 0.0, 0.0], &NonlinearitySpec::new("damped-cubic"), None)?;
    let sched = ArgumentSchedule::epca(-50, 50)?;
    let split = spectral_split(sys.a(), 1e-9)?;
    let bundle = compute_constants(sys.a(), &split, &sched, sys.lipschitz(), default_alpha(&split))?;
    let report = check_conditions(&sys, &sched, Some(&split), Some(&bundle), 200, 1);
    print!("{report}");
    println!("p = {:.4}, K = {:.3}, 2pl = {:.4}", bundle.p_const, bundle.k_const, bundle.c10.lhs);
    Ok(())
}
