//! A solution off the center surface and the on-surface solution it
//! shadows.

use epcag::analysis::{compute_constants, default_alpha, spectral_split};
use epcag::harness::{build_system, NonlinearitySpec};
use epcag::manifolds::{ManifoldOptions, ManifoldSetup};
use epcag::reduction::{asymptotic_phase, PhaseOptions};
use epcag::schedule::ArgumentSchedule;
use nalgebra::{dmatrix, dvector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = NonlinearitySpec::new("tanh-coupled").with("eps", 0.01);
    let (sys, _) = build_system(dmatrix![-1.0, 0.0; 0.0, 0.0], &spec, None)?;
    let sched = ArgumentSchedule::epca(-150, 60)?;
    let split = spectral_split(sys.a(), 1e-9)?;
    let bundle = compute_constants(sys.a(), &split, &sched, sys.lipschitz(), default_alpha(&split))?;
    let setup = ManifoldSetup::new(&sys, &sched, &split, &bundle, &ManifoldOptions::default())?;

    let res = asymptotic_phase(&sys, &setup, 0, &dvector![0.7, -0.4], &PhaseOptions::default())?;
    println!("d* = {:.10}, {} iterates, ball radius {:.4}", res.d_star[0], res.iterates.len() - 1, res.ball_radius);
    for (t, w) in res.weighted.iter().step_by(100) {
        println!("t = {t:>6.2}   |z - mu| e^(alpha t) = {w:.6}");
    }
    println!("bound K(1+2pl)|X0| = {:.6}", res.bound);
    Ok(())
}
