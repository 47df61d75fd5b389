//! Randomized properties of the schedule and the solver.

use epcag::schedule::ArgumentSchedule;
use epcag::solver::{solve_backward, solve_forward, HybridSystem, SolverOptions};
use nalgebra::{dmatrix, dvector, DMatrix};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn beta_stays_in_its_interval(seed in any::<u64>(), bound in 0.2..2.0f64, frac in 0.0..1.0f64) {
        let sched = ArgumentSchedule::randomized(-10, 10, bound, seed).unwrap();
        let (lo, hi) = sched.span();
        let t = lo + frac * (hi - lo) * 0.999;
        let i = sched.interval_index(t).unwrap();
        let (a, b) = sched.interval(i);
        prop_assert!(a <= t && t < b);
        let z = sched.beta(t).unwrap();
        prop_assert!(a <= z && z <= b);
        prop_assert!(b - a <= sched.theta_bound() + 1e-12);
    }

    /// `z' = a z + b z(β)` solves in closed form on every interval:
    /// `z(t) = φ(t − ζ) w` with `φ(s) = e^{as}(1 + b/a) − b/a`.
    #[test]
    fn scalar_linear_matches_closed_form(
        seed in any::<u64>(),
        a in prop_oneof![-1.0..-0.1f64, 0.1..1.0f64],
        b in -0.2..0.2f64,
    ) {
        let sys = HybridSystem::new(dmatrix![a], b.abs(), move |_, _, w| w * b).unwrap();
        let sched = ArgumentSchedule::randomized(0, 6, 1.0, seed).unwrap();
        let phi = |s: f64| (a * s).exp() * (1.0 + b / a) - b / a;
        let t0 = sched.theta(0);
        let traj = solve_forward(&sys, &sched, t0, &dvector![1.0], sched.theta(6), &SolverOptions::default()).unwrap();
        let mut z_left = 1.0;
        for i in 0..6 {
            let zeta = sched.zeta(i);
            let w = z_left / phi(sched.theta(i) - zeta);
            let (lo, hi) = sched.interval(i);
            for k in 0..=4 {
                let t = lo + (hi - lo) * k as f64 / 4.0;
                let exact = phi(t - zeta) * w;
                let got = traj.segment(i).unwrap().eval(t)[0];
                prop_assert!((got - exact).abs() <= 1e-8 * (1.0 + exact.abs()), "i = {}, t = {}: {} vs {}", i, t, got, exact);
            }
            z_left = phi(hi - zeta) * w;
        }
    }

    #[test]
    fn forward_then_backward_returns(seed in any::<u64>(), z in prop::array::uniform2(-1.5..1.5f64)) {
        let a = DMatrix::from_row_slice(2, 2, &[-0.6, 0.4, -0.4, 0.1]);
        let sys = HybridSystem::new(a, 0.05, |_, z, w| dvector![0.05 * w[1].tanh(), 0.05 * z[0].tanh()]).unwrap();
        let sched = ArgumentSchedule::randomized(-2, 8, 1.0, seed).unwrap();
        let opts = SolverOptions::default().with_tol(1e-12);
        let t0 = sched.theta(0);
        let t1 = sched.theta(5);
        let z0 = dvector![z[0], z[1]];
        let fwd = solve_forward(&sys, &sched, t0, &z0, t1, &opts).unwrap();
        let end = fwd.eval(t1).unwrap();
        let back = solve_backward(&sys, &sched, t1, &end, t0, &opts).unwrap();
        prop_assert!(!back.nonunique());
        prop_assert!((back.eval(t0).unwrap() - z0).norm() <= 1e-7);
    }
}
