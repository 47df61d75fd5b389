//! Sampled stability verdicts for three scalar equations.

use epcag::reduction::{classify_stability, StabilityOptions};
use epcag::schedule::ArgumentSchedule;
use epcag::solver::HybridSystem;
use nalgebra::{dmatrix, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sched = ArgumentSchedule::epca(0, 400)?;
    let linear = HybridSystem::linear(dmatrix![-1.0])?;
    let cubic = |sign: f64| {
        HybridSystem::new_unchecked(dmatrix![0.0], 0.75, move |_, z: &DVector<f64>, _| z.map(|v| sign * v * v * v))
    };
    let mut opts = StabilityOptions { radii: vec![0.2, 0.1], horizon: Some(300.0), decay_fraction: 0.5, ..Default::default() };
    opts.solver.step = 0.05;

    for (name, sys) in [("z' = -z", linear), ("z' = -z^3", cubic(-1.0)?), ("z' = +z^3", cubic(1.0)?)] {
        let v = classify_stability(&sys, &sched, &opts)?;
        println!("{name:<10} {:<22} rate {:?}", v.classification.to_string(), v.rate);
    }
    Ok(())
}
