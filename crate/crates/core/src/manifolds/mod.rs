//! Stable and center integral surfaces as graphs over block coordinates.
//!
//! After the spectral change of variables `y = T z = (u, v)` the stable
//! surface is `v = F(t, u)` and the center surface is `u = G(t, v)`. Both are
//! computed pointwise by Picard iteration on the integral form of the
//! equation, with improper integrals cut at a finite horizon.

mod cache;
mod graph;
mod grid;
mod invariance;
mod picard;

pub use cache::{CacheOptions, CenterGraphCache};
pub use graph::{GraphKind, ManifoldApprox, ManifoldOptions, ManifoldSetup, ShiftedConstants};
pub use invariance::{verify_surface_invariance, InvarianceReport};

pub(crate) use graph::StartGuess;
pub(crate) use picard::BlockFn;

use std::fmt::Write as _;

use nalgebra::DVector;

use crate::analysis::{ConstantsBundle, SpectralSplit};
use crate::error::{Error, Result};
use crate::schedule::ArgumentSchedule;
use crate::solver::HybridSystem;

/// One-shot `F(t, c)`.
pub fn eval_f(
    sys: &HybridSystem,
    sched: &ArgumentSchedule,
    split: &SpectralSplit,
    bundle: &ConstantsBundle,
    t: f64,
    c: &DVector<f64>,
    opts: &ManifoldOptions,
) -> Result<ManifoldApprox> {
    ManifoldSetup::new(sys, sched, split, bundle, opts)?.eval_f(t, c)
}

/// One-shot `G(t, d)`.
pub fn eval_g(
    sys: &HybridSystem,
    sched: &ArgumentSchedule,
    split: &SpectralSplit,
    bundle: &ConstantsBundle,
    t: f64,
    d: &DVector<f64>,
    opts: &ManifoldOptions,
) -> Result<ManifoldApprox> {
    ManifoldSetup::new(sys, sched, split, bundle, opts)?.eval_g(t, d)
}

/// A graph tabulated on a tensor grid of its input coordinates.
#[derive(Debug, Clone)]
pub struct GraphTable {
    pub kind: GraphKind,
    pub time: f64,
    pub inputs: Vec<DVector<f64>>,
    pub values: Vec<DVector<f64>>,
    pub iterates: Vec<usize>,
    pub last_deltas: Vec<f64>,
    pub envelope_ratios: Vec<f64>,
    /// Theoretical Lipschitz bound of the graph map.
    pub lipschitz_bound: f64,
}

impl GraphTable {
    /// Input coordinates, then graph values, then the Picard iteration count.
    pub fn to_csv(&self) -> String {
        let (x, y) = match self.kind {
            GraphKind::Stable => ("u", "v"),
            GraphKind::Center => ("v", "u"),
        };
        let dim_in = self.inputs.first().map_or(0, |p| p.len());
        let dim_out = self.values.first().map_or(0, |p| p.len());
        let header: Vec<String> = (1..=dim_in)
            .map(|i| format!("{x}_{i}"))
            .chain((1..=dim_out).map(|i| format!("{y}_{i}")))
            .chain(std::iter::once("iterates".to_string()))
            .collect();
        let mut out = header.join(",");
        out.push('\n');
        for ((p, v), it) in self.inputs.iter().zip(&self.values).zip(&self.iterates) {
            let cells: Vec<String> =
                p.iter().chain(v.iter()).map(|c| format!("{c:.12e}")).chain(std::iter::once(it.to_string())).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }

    pub fn max_iterates(&self) -> usize {
        self.iterates.iter().copied().max().unwrap_or(0)
    }

    pub fn max_last_delta(&self) -> f64 {
        self.last_deltas.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_envelope_ratio(&self) -> f64 {
        self.envelope_ratios.iter().copied().fold(0.0, f64::max)
    }

    /// Largest difference quotient over all pairs of grid points.
    pub fn max_lipschitz_ratio(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.inputs.len() {
            for j in i + 1..self.inputs.len() {
                let den = (&self.inputs[i] - &self.inputs[j]).norm();
                if den > 0.0 {
                    worst = worst.max((&self.values[i] - &self.values[j]).norm() / den);
                }
            }
        }
        worst
    }
}

/// Tabulates `F(t, ·)` or `G(t, ·)` on `[−half_width, half_width]` per axis.
pub fn graph_table(
    setup: &ManifoldSetup,
    kind: GraphKind,
    t: f64,
    half_width: f64,
    resolution: usize,
) -> Result<GraphTable> {
    let split = setup.split();
    let dim_in = match kind {
        GraphKind::Stable => split.k,
        GraphKind::Center => split.center_dim(),
    };
    if dim_in == 0 || resolution < 2 {
        return Err(Error::InvalidParameter { name: "grid", reason: "needs an input coordinate and resolution >= 2".into() });
    }
    let total = resolution.checked_pow(dim_in as u32).filter(|&m| m <= 1 << 16);
    let Some(total) = total else {
        return Err(Error::InvalidParameter { name: "resolution", reason: "grid too large".into() });
    };
    let h = 2.0 * half_width / (resolution - 1) as f64;
    let mut table = GraphTable {
        kind,
        time: t,
        inputs: Vec::with_capacity(total),
        values: Vec::with_capacity(total),
        iterates: Vec::with_capacity(total),
        last_deltas: Vec::with_capacity(total),
        envelope_ratios: Vec::with_capacity(total),
        lipschitz_bound: match kind {
            GraphKind::Stable => setup.stable_lipschitz_bound(),
            GraphKind::Center => setup.center_lipschitz_bound(),
        },
    };
    for flat in 0..total {
        let mut rest = flat;
        let point = DVector::from_fn(dim_in, |_, _| {
            let q = rest % resolution;
            rest /= resolution;
            -half_width + h * q as f64
        });
        let approx = match kind {
            GraphKind::Stable => setup.eval_f(t, &point)?,
            GraphKind::Center => setup.eval_g(t, &point)?,
        };
        table.iterates.push(approx.iterates);
        table.last_deltas.push(approx.last_delta());
        table.envelope_ratios.push(approx.envelope_ratio);
        table.values.push(approx.value);
        table.inputs.push(point);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{compute_constants, default_alpha, spectral_split};
    use crate::solver::SolverOptions;
    use nalgebra::{dmatrix, dvector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn system(l: f64) -> HybridSystem {
        HybridSystem::new(dmatrix![-1.0, 0.0; 0.0, 0.0], l, move |_t, z: &DVector<f64>, w: &DVector<f64>| {
            dvector![l * (0.5 * w[1]).tanh() * 0.5, l * (0.3 * z[0] + 0.4 * w[1]).sin()]
        })
        .unwrap()
    }

    fn setup_for(sys: &HybridSystem, sched: &ArgumentSchedule, opts: &ManifoldOptions) -> ManifoldSetup {
        let split = spectral_split(sys.a(), 1e-9).unwrap();
        let bundle = compute_constants(sys.a(), &split, sched, sys.lipschitz(), default_alpha(&split)).unwrap();
        ManifoldSetup::new(sys, sched, &split, &bundle, opts).unwrap()
    }

    fn window() -> ArgumentSchedule {
        ArgumentSchedule::alternating(-120, 120).unwrap()
    }

    #[test]
    fn zero_nonlinearity_gives_flat_graphs() {
        let sys = HybridSystem::linear(dmatrix![-1.0, 0.0; 0.0, 0.0]).unwrap();
        let sched = window();
        let setup = setup_for(&sys, &sched, &ManifoldOptions::default());
        let f = setup.eval_f(sched.zeta(3), &dvector![0.7]).unwrap();
        assert!(f.value.norm() < 1e-12);
        assert!(f.envelope_holds());
        let g = setup.eval_g(sched.zeta(3), &dvector![-0.4]).unwrap();
        assert!(g.value.norm() < 1e-12);
    }

    #[test]
    fn graphs_vanish_at_origin() {
        let sys = system(0.01);
        let sched = window();
        let setup = setup_for(&sys, &sched, &ManifoldOptions::default());
        for i in [0, 5] {
            assert!(setup.eval_f(sched.zeta(i), &dvector![0.0]).unwrap().value.norm() < 1e-10);
            assert!(setup.eval_g(sched.zeta(i), &dvector![0.0]).unwrap().value.norm() < 1e-10);
        }
    }

    #[test]
    fn stable_graph_is_lipschitz_and_decays() {
        let sys = system(0.01);
        let sched = window();
        let setup = setup_for(&sys, &sched, &ManifoldOptions::default());
        let t = sched.zeta(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..8 {
            let c1 = dvector![rng.random_range(-1.0..1.0)];
            let c2 = dvector![rng.random_range(-1.0..1.0)];
            let f1 = setup.eval_f(t, &c1).unwrap();
            let f2 = setup.eval_f(t, &c2).unwrap();
            let ratio = (&f1.value - &f2.value).norm() / (&c1 - &c2).norm();
            assert!(ratio <= f1.lipschitz_bound * 1.05, "{ratio} vs {}", f1.lipschitz_bound);
            assert!(f1.envelope_holds(), "{}", f1.envelope_ratio);
            let smallness = setup.stable_smallness();
            let deltas = &f1.deltas;
            for w in deltas.windows(2).filter(|w| w[0] > 1e-12) {
                assert!(w[1] / w[0] <= smallness + 0.05, "{deltas:?}");
            }
        }
    }

    #[test]
    fn center_graph_is_lipschitz() {
        let sys = system(0.01);
        let sched = window();
        let setup = setup_for(&sys, &sched, &ManifoldOptions::default());
        let t = sched.zeta(1);
        let (d1, d2) = (dvector![0.8], dvector![-0.3]);
        let g1 = setup.eval_g(t, &d1).unwrap();
        let g2 = setup.eval_g(t, &d2).unwrap();
        assert!(g1.value.norm() > 0.0);
        let ratio = (&g1.value - &g2.value).norm() / 1.1;
        assert!(ratio <= g1.lipschitz_bound, "{ratio} vs {}", g1.lipschitz_bound);
        assert!(g1.envelope_holds(), "{}", g1.envelope_ratio);
    }

    #[test]
    fn horizon_and_start_do_not_matter() {
        let sys = system(0.01);
        let sched = window();
        let opts = ManifoldOptions::default();
        let setup = setup_for(&sys, &sched, &opts);
        let t = sched.zeta(0);
        let c = dvector![0.9];
        let base = setup.eval_f(t, &c).unwrap();
        let h = setup.stable_horizon();
        let long = setup.eval_f_with_horizon(t, &c, 2.0 * h).unwrap();
        let tail = setup.bundle().k_const * (-setup.split().sigma * h).exp();
        assert!((&base.value - &long.value).norm() <= tail, "{}", (&base.value - &long.value).norm());
        let linear = setup.eval_f_from_linear_flow(t, &c).unwrap();
        assert!((&base.value - &linear.value).norm() <= 10.0 * opts.tol);
    }

    #[test]
    fn smallness_is_enforced() {
        let sys = system(0.2);
        let sched = window();
        let setup = setup_for(&sys, &sched, &ManifoldOptions::default());
        assert!(matches!(setup.eval_f(0.5, &dvector![0.1]), Err(Error::SmallnessViolated(_))));
        assert!(matches!(setup.eval_g(0.5, &dvector![0.1]), Err(Error::SmallnessViolated(_))));
    }

    #[test]
    fn surface_is_invariant() {
        let sys = system(0.01);
        let sched = window();
        let setup = setup_for(&sys, &sched, &ManifoldOptions::default());
        let solver = SolverOptions::default();
        let report = verify_surface_invariance(&sys, &setup, 0, &dvector![0.6], 5, 0.1, &solver).unwrap();
        assert_eq!(report.defects.len(), 5);
        assert!(report.passes(), "{report:?}");
        assert!(report.off_surface_min_center >= 0.09, "{report:?}");
    }

    #[test]
    fn linear_surface_has_zero_defect() {
        let sys = HybridSystem::linear(dmatrix![-1.0, 0.0; 0.0, 0.0]).unwrap();
        let sched = window();
        let setup = setup_for(&sys, &sched, &ManifoldOptions::default());
        let report =
            verify_surface_invariance(&sys, &setup, 1, &dvector![1.0], 3, 0.1, &SolverOptions::default()).unwrap();
        assert!(report.max_defect() < 1e-12);
        assert!((report.off_surface_min_center - 0.1).abs() < 1e-12);
    }

    #[test]
    fn cache_interpolates_and_guards_box() {
        let sys = system(0.01);
        let sched = ArgumentSchedule::epca(-120, 120).unwrap();
        let opts = ManifoldOptions { step: 0.1, tol: 1e-9, ..Default::default() };
        let setup = setup_for(&sys, &sched, &opts);
        let cache = CenterGraphCache::new(
            setup.clone(),
            CacheOptions { half_width: 1.0, resolution: 21, time_nodes: 2, autonomous: true },
        )
        .unwrap();
        let d = dvector![0.37];
        let direct = setup.eval_g(10.25, &d).unwrap().value;
        let cached = cache.eval(10.25, &d).unwrap();
        assert!((direct - &cached).norm() < 1e-4, "{cached}");
        let calls = cache.evaluations();
        // same phase one period later reuses every node
        cache.eval(11.25, &d).unwrap();
        assert_eq!(cache.evaluations(), calls);
        assert!(matches!(cache.eval(1.0, &dvector![1.5]), Err(Error::BoxExceeded { .. })));
    }

    #[test]
    fn csv_dump_has_one_row_per_node() {
        let sys = system(0.01);
        let sched = window();
        let setup = setup_for(&sys, &sched, &ManifoldOptions { step: 0.1, ..Default::default() });
        let table = graph_table(&setup, GraphKind::Stable, 0.5, 1.0, 5).unwrap();
        let csv = table.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "u_1,v_1,iterates");
        assert_eq!(lines.len(), 6);
        assert!(table.max_lipschitz_ratio() <= table.lipschitz_bound);
        assert!(table.max_envelope_ratio() <= 1.0);
    }
}
