//! One function per recipe. Each returns its report section and writes its
//! CSV files through `Outputs`.

use std::sync::Arc;

use nalgebra::DVector;
use serde_json::{json, Value};

use super::config::ExperimentConfig;
use super::Outputs;
use crate::analysis::{check_conditions, compute_constants, default_alpha, spectral_split_with, SplitOptions};
use crate::analysis::{ConstantsBundle, SpectralSplit};
use crate::error::{Error, Result};
use crate::manifolds::{graph_table, verify_surface_invariance, CenterGraphCache, GraphKind, GraphTable, ManifoldSetup};
use crate::reduction::{asymptotic_phase, classify_stability, reduction_check, StabilityVerdict};
use crate::schedule::ArgumentSchedule;
use crate::solver::{solve_anchor, solve_backward, solve_forward, HybridSystem, Trajectory};

struct Context {
    sys: HybridSystem,
    autonomous: bool,
    sched: ArgumentSchedule,
}

fn context(cfg: &ExperimentConfig) -> Result<Context> {
    let (sys, autonomous) = cfg.build_system()?;
    let sched = cfg.build_schedule()?;
    Ok(Context { sys, autonomous, sched })
}

fn initial_state(cfg: &ExperimentConfig, n: usize) -> Result<DVector<f64>> {
    if cfg.run.z0.len() != n {
        return Err(Error::Config(format!("`run.z0` must have {n} entries")));
    }
    Ok(DVector::from_column_slice(&cfg.run.z0))
}

fn analysis(cfg: &ExperimentConfig, ctx: &Context) -> Result<(SpectralSplit, ConstantsBundle)> {
    let opts = SplitOptions { tol_eig: cfg.analysis.tol_eig, sigma: cfg.analysis.sigma };
    let split = spectral_split_with(ctx.sys.a(), &opts)?;
    let alpha = cfg.analysis.alpha.unwrap_or_else(|| default_alpha(&split));
    let bundle = compute_constants(ctx.sys.a(), &split, &ctx.sched, ctx.sys.lipschitz(), alpha)?;
    Ok((split, bundle))
}

fn manifold_setup(cfg: &ExperimentConfig, ctx: &Context) -> Result<ManifoldSetup> {
    let (split, bundle) = analysis(cfg, ctx)?;
    ManifoldSetup::new(&ctx.sys, &ctx.sched, &split, &bundle, &cfg.manifold)
}

fn trajectory_summary(traj: &Trajectory) -> Value {
    let nonunique: Vec<i64> = traj.reports.iter().filter(|r| r.alternative_anchor.is_some()).map(|r| r.index).collect();
    let max_norm = traj.segments.iter().map(|s| s.max_norm()).fold(0.0, f64::max);
    json!({
        "span": [traj.span.0, traj.span.1],
        "intervals": traj.reports,
        "nonunique_intervals": nonunique,
        "max_norm": max_norm,
        "continuity_defect": traj.continuity_defect(),
    })
}

pub(super) fn simulate(cfg: &ExperimentConfig, out: &Outputs) -> Result<Value> {
    let ctx = context(cfg)?;
    let z0 = initial_state(cfg, ctx.sys.dim())?;
    if !(cfg.run.t_end > cfg.run.t0) {
        return Err(Error::Config("`run.t_end` must exceed `run.t0`".into()));
    }
    let traj = solve_forward(&ctx.sys, &ctx.sched, cfg.run.t0, &z0, cfg.run.t_end, &cfg.solver)?;
    out.write("trajectory_forward.csv", &traj.to_csv())?;
    Ok(trajectory_summary(&traj))
}

/// The uniqueness probe is always on here: flagging ambiguous anchors is the
/// point of continuing backward.
pub(super) fn continue_backward(cfg: &ExperimentConfig, out: &Outputs) -> Result<Value> {
    let ctx = context(cfg)?;
    let z0 = initial_state(cfg, ctx.sys.dim())?;
    if !(cfg.run.t_end < cfg.run.t0) {
        return Err(Error::Config("`run.t_end` must precede `run.t0`".into()));
    }
    let opts = cfg.solver.with_probe(true);
    let traj = solve_backward(&ctx.sys, &ctx.sched, cfg.run.t0, &z0, cfg.run.t_end, &opts)?;
    out.write("trajectory_backward.csv", &traj.to_csv())?;
    Ok(trajectory_summary(&traj))
}

fn table_summary(table: &GraphTable) -> Value {
    json!({
        "time": table.time,
        "points": table.inputs.len(),
        "max_iterates": table.max_iterates(),
        "max_last_delta": table.max_last_delta(),
        "max_envelope_ratio": table.max_envelope_ratio(),
        "max_lipschitz_ratio": table.max_lipschitz_ratio(),
        "lipschitz_bound": table.lipschitz_bound,
    })
}

pub(super) fn manifold_f(cfg: &ExperimentConfig, out: &Outputs) -> Result<Value> {
    let ctx = context(cfg)?;
    let setup = manifold_setup(cfg, &ctx)?;
    let t = ctx.sched.zeta(cfg.run.interval);
    let table = graph_table(&setup, GraphKind::Stable, t, cfg.graph.half_width, cfg.graph.resolution)?;
    out.write("manifold_F.csv", &table.to_csv())?;
    let mut report = json!({
        "constants": setup.bundle(),
        "split": setup.split().summary(),
        "block_lipschitz": setup.block_lipschitz(),
        "smallness": setup.stable_smallness(),
        "horizon": setup.stable_horizon(),
        "graph": table_summary(&table),
    });
    if setup.split().center_dim() > 0 {
        let c = DVector::from_element(setup.split().k, 0.5 * cfg.graph.half_width);
        let inv = verify_surface_invariance(&ctx.sys, &setup, cfg.run.interval, &c, 5, 0.1, &cfg.solver)?;
        report["invariance"] = json!({
            "report": inv,
            "max_defect": inv.max_defect(),
            "threshold": inv.threshold(),
            "passes": inv.passes(),
        });
    }
    Ok(report)
}

pub(super) fn manifold_g(cfg: &ExperimentConfig, out: &Outputs) -> Result<Value> {
    let ctx = context(cfg)?;
    let setup = manifold_setup(cfg, &ctx)?;
    let t = ctx.sched.zeta(cfg.run.interval);
    let table = graph_table(&setup, GraphKind::Center, t, cfg.graph.half_width, cfg.graph.resolution)?;
    out.write("manifold_G.csv", &table.to_csv())?;
    Ok(json!({
        "constants": setup.bundle(),
        "shifted": setup.shifted(),
        "block_lipschitz": setup.block_lipschitz(),
        "horizon": setup.center_horizon(),
        "graph": table_summary(&table),
    }))
}

pub(super) fn phase(cfg: &ExperimentConfig, out: &Outputs) -> Result<Value> {
    let ctx = context(cfg)?;
    let setup = manifold_setup(cfg, &ctx)?;
    let z0 = initial_state(cfg, ctx.sys.dim())?;
    let res = asymptotic_phase(&ctx.sys, &setup, cfg.run.interval, &z0, &cfg.phase)?;
    out.write("trajectory_solution.csv", &res.solution.to_csv())?;
    out.write("trajectory_companion.csv", &res.companion.to_csv())?;
    Ok(json!({
        "start": res.start,
        "d_star": res.d_star.as_slice(),
        "iterates": res.iterates.len() - 1,
        "ball_radius": res.ball_radius,
        "ball_distances": res.ball_distances,
        "offset": res.offset,
        "bound": res.bound,
        "max_weighted": res.max_weighted(),
        "bound_ratio": res.bound_ratio(),
    }))
}

fn verdict_table(rows: &[(&str, &StabilityVerdict)]) -> String {
    let mut s = format!("{:<10} {:<24} {:>10} {:>9}\n", "system", "verdict", "rate", "marginal");
    for (name, v) in rows {
        let rate = v.rate.map_or("-".to_string(), |r| format!("{r:.4}"));
        s.push_str(&format!("{:<10} {:<24} {:>10} {:>9}\n", name, v.classification.to_string(), rate, v.marginal));
    }
    s
}

pub(super) fn stability(cfg: &ExperimentConfig, out: &Outputs) -> Result<Value> {
    let ctx = context(cfg)?;
    let verdict = classify_stability(&ctx.sys, &ctx.sched, &cfg.stability)?;
    out.say(&verdict_table(&[("full", &verdict)]));
    Ok(json!({ "verdict": verdict }))
}

pub(super) fn reduce(cfg: &ExperimentConfig, out: &Outputs) -> Result<Value> {
    let ctx = context(cfg)?;
    let setup = manifold_setup(cfg, &ctx)?;
    let mut cache_opts = cfg.cache;
    cache_opts.autonomous &= ctx.autonomous;
    let cache = Arc::new(CenterGraphCache::new(setup, cache_opts)?);
    let check = reduction_check(&ctx.sys, cache, &cfg.stability)?;
    let mut table = verdict_table(&[("full", &check.full), ("reduced", &check.reduced)]);
    table.push_str(&format!("agree: {}\n", check.agree));
    out.say(&table);
    Ok(json!({ "check": check }))
}

pub(super) fn conditions(cfg: &ExperimentConfig, out: &Outputs) -> Result<Value> {
    let ctx = context(cfg)?;
    let (split, bundle, problem) = match analysis(cfg, &ctx) {
        Ok((s, b)) => (Some(s), Some(b), None),
        Err(e @ (Error::PositiveSpectrum { .. } | Error::IllConditioned { .. } | Error::InvalidParameter { .. })) => {
            (None, None, Some(e.to_string()))
        }
        Err(e) => return Err(e),
    };
    let report = check_conditions(&ctx.sys, &ctx.sched, split.as_ref(), bundle.as_ref(), cfg.analysis.probes, cfg.seed);
    out.say(&report.to_string());
    Ok(json!({
        "all_pass": report.all_pass(),
        "entries": report.entries,
        "constants": bundle,
        "split": split.map(|s| s.summary()),
        "analysis_error": problem,
    }))
}

/// `z' = 3z − z(β(t))²` on the alternating schedule: a forward datum at
/// `t = −1` whose anchor equation has no real root, and two anchors at
/// `t = 0` whose solutions meet at `t = 1`.
pub(super) fn example1(cfg: &ExperimentConfig, out: &Outputs) -> Result<Value> {
    let sys = HybridSystem::new_unchecked(nalgebra::dmatrix![3.0], 0.0, |_, _, w| w.map(|x| -x * x))?;
    let sched = ArgumentSchedule::alternating(0, 1)?;
    let opts = cfg.solver.with_probe(true);
    let e3 = 3.0_f64.exp();

    let x0 = -10.0;
    let discriminant = 9.0 + 12.0 * e3 * (e3 - 1.0) * x0;
    let forward = match solve_anchor(&sys, &sched, 0, -1.0, &DVector::from_element(1, x0), &opts) {
        Ok((sol, _)) => json!({ "continued": true, "anchor": sol.w[0] }),
        Err(e @ Error::NonContraction { .. }) => json!({ "continued": false, "diagnostic": e.to_string() }),
        Err(e) => return Err(e),
    };

    let flow_at_one = |z: f64| e3 * z - z * z / 3.0 * (e3 - 1.0);
    let sum = 3.0 * e3 / (e3 - 1.0);
    let (za, zb) = (0.1, sum - 0.1);
    let a = solve_forward(&sys, &sched, 0.0, &DVector::from_element(1, za), 1.0, &cfg.solver)?;
    let b = solve_forward(&sys, &sched, 0.0, &DVector::from_element(1, zb), 1.0, &cfg.solver)?;
    let (a1, b1) = (a.eval(1.0).unwrap()[0], b.eval(1.0).unwrap()[0]);
    out.write("trajectory_example1_a.csv", &a.to_csv())?;
    out.write("trajectory_example1_b.csv", &b.to_csv())?;
    let back = solve_backward(&sys, &sched, 1.0, &DVector::from_element(1, a1), -1.0, &opts)?;
    out.write("trajectory_example1_backward.csv", &back.to_csv())?;
    let alternative = back.reports.iter().find_map(|r| r.alternative_anchor.clone());

    Ok(json!({
        "no_root_branch": {
            "x0": x0,
            "discriminant": discriminant,
            "forward": forward,
        },
        "collision": {
            "anchor_sum": sum,
            "anchors": [za, zb],
            "values_at_one": [a1, b1],
            "closed_form_at_one": [flow_at_one(za), flow_at_one(zb)],
            "difference": (a1 - b1).abs(),
            "backward_nonunique": back.nonunique(),
            "backward_anchor": back.anchors.get(&0).map(|w| w[0]),
            "alternative_anchor": alternative,
        },
    }))
}
