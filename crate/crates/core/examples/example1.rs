//! `z' = 3z − z(β(t))²` on the alternating schedule: two different anchors
//! whose solutions meet at `t = 1`, so backward continuation is ambiguous.

use epcag::schedule::ArgumentSchedule;
use epcag::solver::{solve_backward, solve_forward, HybridSystem, SolverOptions};
use nalgebra::{dmatrix, dvector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = HybridSystem::new_unchecked(dmatrix![3.0], 0.0, |_, _, w| w.map(|x| -x * x))?;
    let sched = ArgumentSchedule::alternating(0, 1)?;
    let opts = SolverOptions::default().with_step(1e-3);

    let e3 = 3.0_f64.exp();
    let za = 0.1;
    let zb = 3.0 * e3 / (e3 - 1.0) - za;
    let a = solve_forward(&sys, &sched, 0.0, &dvector![za], 1.0, &opts)?.eval(1.0).unwrap()[0];
    let b = solve_forward(&sys, &sched, 0.0, &dvector![zb], 1.0, &opts)?.eval(1.0).unwrap()[0];
    println!("z(1) from z(0) = {za}: {a:.12}");
    println!("z(1) from z(0) = {zb:.6}: {b:.12}");

    let back = solve_backward(&sys, &sched, 1.0, &dvector![a], -1.0, &opts.with_probe(true))?;
    let report = &back.reports[0];
    println!("backward anchor {:?}, second anchor {:?}", back.anchors[&0].as_slice(), report.alternative_anchor);
    println!("non-unique: {}", back.nonunique());
    Ok(())
}
