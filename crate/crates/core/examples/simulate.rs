//! Forward continuation of an EPCA equation, compared with its closed form.

use epcag::schedule::ArgumentSchedule;
use epcag::solver::{solve_forward, HybridSystem, SolverOptions};
use nalgebra::{dmatrix, dvector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (a, b) = (-1.0, 0.25);
    let sys = HybridSystem::new(dmatrix![a], b, move |_, _, w| w * b)?;
    let sched = ArgumentSchedule::epca(0, 5)?;
    let traj = solve_forward(&sys, &sched, 0.0, &dvector![1.0], 5.0, &SolverOptions::default())?;

    println!("{:>4} {:>14} {:>14}", "i", "z(i)", "closed form");
    let mut exact = 1.0;
    for i in 0..=5 {
        let z = traj.eval(i as f64).unwrap()[0];
        println!("{i:>4} {z:>14.10} {exact:>14.10}");
        let e = a.exp();
        exact *= e + b / a * (e - 1.0);
    }
    Ok(())
}
