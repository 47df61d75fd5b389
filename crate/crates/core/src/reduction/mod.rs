//! Reduction to the center surface: the reduced equation, the asymptotic
//! phase of nearby solutions, and sampled stability verdicts for both.

mod check;
mod phase;
mod reduced;
mod stability;

pub use check::{reduction_check, ReductionCheck};
pub use phase::{asymptotic_phase, PhaseOptions, PhaseResult};
pub use reduced::{build_reduced, ReducedSystem};
pub use stability::{classify_stability, Classification, Evidence, StabilityOptions, StabilityVerdict};

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::{dmatrix, dvector, DMatrix, DVector};

    use super::*;
    use crate::analysis::{compute_constants, default_alpha, spectral_split};
    use crate::error::Error;
    use crate::harness::catalog::{build_system, NonlinearitySpec};
    use crate::manifolds::{CacheOptions, CenterGraphCache, ManifoldOptions, ManifoldSetup};
    use crate::schedule::ArgumentSchedule;
    use crate::solver::HybridSystem;

    fn setup_for(sys: &HybridSystem, sched: &ArgumentSchedule) -> ManifoldSetup {
        let split = spectral_split(sys.a(), 1e-9).unwrap();
        let bundle = compute_constants(sys.a(), &split, sched, sys.lipschitz(), default_alpha(&split)).unwrap();
        let opts = ManifoldOptions { step: 0.1, tol: 1e-10, ..Default::default() };
        ManifoldSetup::new(sys, sched, &split, &bundle, &opts).unwrap()
    }

    fn cache_for(setup: &ManifoldSetup, half_width: f64) -> Arc<CenterGraphCache> {
        let opts = CacheOptions { half_width, resolution: 41, time_nodes: 4, autonomous: true };
        Arc::new(CenterGraphCache::new(setup.clone(), opts).unwrap())
    }

    fn scalar(a: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static, l: f64) -> HybridSystem {
        HybridSystem::new_unchecked(DMatrix::from_element(1, 1, a), l, move |_, z: &DVector<f64>, _| {
            DVector::from_element(1, f(z[0]))
        })
        .unwrap()
    }

    fn short(radii: Vec<f64>, horizon: f64, decay_fraction: f64) -> StabilityOptions {
        let mut opts = StabilityOptions { radii, horizon: Some(horizon), t0_count: 2, decay_fraction, ..Default::default() };
        opts.solver.step = 0.05;
        opts
    }

    #[test]
    fn linear_decay_is_exponential_with_unit_rate() {
        let sys = HybridSystem::linear(dmatrix![-1.0]).unwrap();
        let sched = ArgumentSchedule::epca(0, 40).unwrap();
        let verdict = classify_stability(&sys, &sched, &StabilityOptions::default()).unwrap();
        assert_eq!(verdict.classification, Classification::Exponential);
        assert!((verdict.rate.unwrap() - 1.0).abs() < 0.05, "{:?}", verdict.rate);
        assert_eq!(verdict.t0_sweep.len(), 5);
        assert_eq!(verdict.evidence.len(), 15);
        assert!(verdict.evidence.iter().all(|e| e.max_excursion >= e.final_norm));
    }

    #[test]
    fn cubic_damping_is_asymptotic_but_not_exponential() {
        let sys = scalar(0.0, |v| -v * v * v, 0.12);
        let sched = ArgumentSchedule::epca(0, 260).unwrap();
        let verdict = classify_stability(&sys, &sched, &short(vec![0.2, 0.1], 200.0, 0.5)).unwrap();
        assert_eq!(verdict.classification, Classification::AsymptoticallyStable);
        // closed form |v(t)| = (v0^-2 + 2t)^(-1/2)
        let e = &verdict.evidence[0];
        let exact = (0.2f64.powi(-2) + 2.0 * 200.0).powf(-0.5);
        assert!((e.final_norm - exact).abs() < 1e-3 * exact, "{} vs {exact}", e.final_norm);
    }

    #[test]
    fn cubic_growth_escapes() {
        let sys = scalar(0.0, |v| v * v * v, 0.12);
        let sched = ArgumentSchedule::epca(0, 80).unwrap();
        let verdict = classify_stability(&sys, &sched, &short(vec![0.2], 60.0, 0.01)).unwrap();
        assert_eq!(verdict.classification, Classification::Unstable);
        assert!(verdict.evidence.iter().all(|e| e.escaped && e.horizon < 13.0));
    }

    #[test]
    fn center_direction_alone_is_only_stable() {
        let sys = HybridSystem::linear(dmatrix![-1.0, 0.0; 0.0, 0.0]).unwrap();
        let sched = ArgumentSchedule::epca(0, 40).unwrap();
        let verdict = classify_stability(&sys, &sched, &StabilityOptions::default()).unwrap();
        assert_eq!(verdict.classification, Classification::Stable);
        assert!(!verdict.marginal);
    }

    #[test]
    fn shrinking_radii_keeps_stability() {
        let sys = scalar(-0.5, |v| 0.1 * v.sin(), 0.1);
        let sched = ArgumentSchedule::epca(0, 40).unwrap();
        let big = classify_stability(&sys, &sched, &short(vec![0.5], 20.0, 0.01)).unwrap();
        let small = classify_stability(&sys, &sched, &short(vec![0.05], 20.0, 0.01)).unwrap();
        assert!(big.classification >= Classification::Stable);
        assert!(small.classification >= Classification::Stable);
    }

    #[test]
    fn zero_nonlinearity_reduces_to_center_block() {
        let sys = HybridSystem::linear(dmatrix![-1.0, 0.0; 0.0, 0.0]).unwrap();
        let sched = ArgumentSchedule::epca(-150, 60).unwrap();
        let setup = setup_for(&sys, &sched);
        let reduced = build_reduced(cache_for(&setup, 1.0), None).unwrap();
        assert_eq!(reduced.system.dim(), 1);
        assert_eq!(reduced.system.a()[(0, 0)], 0.0);
        assert_eq!(reduced.system.rhs(3.5, &dvector![0.4], &dvector![0.3], 3.0)[0], 0.0);
    }

    #[test]
    fn all_stable_split_is_degenerate() {
        let sys = HybridSystem::linear(dmatrix![-1.0, 0.0; 0.0, -2.0]).unwrap();
        let sched = ArgumentSchedule::epca(-150, 60).unwrap();
        let setup = setup_for(&sys, &sched);
        assert!(matches!(build_reduced(cache_for(&setup, 1.0), None), Err(Error::DegenerateDimension(_))));
    }

    #[test]
    fn reduced_cubic_matches_first_order_perturbation() {
        let (a, b, c) = (0.005, 0.016, 0.005);
        let spec = NonlinearitySpec::new("damped-cubic").with("a", a).with("b", b).with("c", c);
        let (sys, _) = build_system(dmatrix![-1.0, 0.0; 0.0, 0.0], &spec, None).unwrap();
        let sched = ArgumentSchedule::epca(-150, 60).unwrap();
        let setup = setup_for(&sys, &sched);
        let reduced = build_reduced(cache_for(&setup, 1.0), None).unwrap();
        for v in [-0.45, -0.2, 0.1, 0.3] {
            let rhs = reduced.system.rhs(10.0, &dvector![v], &dvector![v], 10.0)[0];
            let leading = -b * v * v * v;
            assert!((rhs - leading).abs() <= 2.0 * a * c * v.abs().powi(3) + 1e-5, "{v}: {rhs} vs {leading}");
        }
        assert!(reduced.failure().is_none());
        reduced.system.rhs(10.0, &dvector![1.5], &dvector![0.0], 10.0);
        assert!(matches!(reduced.failure(), Some(Error::BoxExceeded { .. })));
    }

    #[test]
    fn phase_of_decoupled_linear_system() {
        let sys = HybridSystem::linear(dmatrix![-1.0, 0.0; 0.0, 0.0]).unwrap();
        let sched = ArgumentSchedule::epca(-150, 60).unwrap();
        let setup = setup_for(&sys, &sched);
        let res = asymptotic_phase(&sys, &setup, 2, &dvector![1.0, 1.0], &PhaseOptions::default()).unwrap();
        assert!((res.d_star[0] - 1.0).abs() < 1e-12);
        let alpha = setup.bundle().alpha;
        for &(t, w) in &res.weighted {
            let exact = (-(1.0 - alpha) * (t - 2.0)).exp();
            assert!((w - exact).abs() < 1e-6, "{t}: {w} vs {exact}");
        }
        assert!(res.bound_ratio() <= 1.0);
    }

    #[test]
    fn phase_on_surface_is_trivial() {
        let spec = NonlinearitySpec::new("tanh-coupled").with("eps", 0.01);
        let (sys, _) = build_system(dmatrix![-1.0, 0.0; 0.0, 0.0], &spec, None).unwrap();
        let sched = ArgumentSchedule::epca(-150, 60).unwrap();
        let setup = setup_for(&sys, &sched);
        let v0 = dvector![0.3];
        let u0 = setup.eval_g(sched.zeta(1), &v0).unwrap().value;
        let z0 = &setup.split().inverse * crate::linalg::concat(&u0, &v0);
        let res = asymptotic_phase(&sys, &setup, 1, &z0, &PhaseOptions::default()).unwrap();
        assert!((&res.d_star - &v0).norm() < 1e-8);
        assert!(res.max_weighted() < 1e-6, "{}", res.max_weighted());
    }

    #[test]
    fn phase_converges_inside_the_ball() {
        let spec = NonlinearitySpec::new("tanh-coupled").with("eps", 0.01);
        let (sys, _) = build_system(dmatrix![-1.0, 0.0; 0.0, 0.0], &spec, None).unwrap();
        let sched = ArgumentSchedule::epca(-150, 60).unwrap();
        let setup = setup_for(&sys, &sched);
        let res = asymptotic_phase(&sys, &setup, 0, &dvector![0.6, -0.5], &PhaseOptions::default()).unwrap();
        assert!(res.ball_distances.iter().all(|&d| d <= res.ball_radius * (1.0 + 1e-9) + 1e-8));
        assert!(res.bound_ratio() <= 1.1, "{}", res.bound_ratio());
        assert!(res.iterates.len() > 2);
    }
}
