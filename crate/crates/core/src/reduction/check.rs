//! Side-by-side stability of the full and reduced systems.

use std::sync::Arc;

use serde::Serialize;

use super::reduced::build_reduced;
use super::stability::{classify_stability, Classification, StabilityOptions, StabilityVerdict};
use crate::error::Result;
use crate::manifolds::CenterGraphCache;
use crate::solver::HybridSystem;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionCheck {
    pub full: StabilityVerdict,
    pub reduced: StabilityVerdict,
    pub agree: bool,
    /// Center graph evaluations spent filling the cache.
    pub graph_evaluations: usize,
}

/// Classifies the full system and its reduction with the same radii, start
/// times and seed. Verdicts agree when they match after the exponential
/// refinement is collapsed.
///
/// A lookup outside the cache box during a reduced run that did not escape
/// is returned as an error, since the reduced dynamics were then clamped.
pub fn reduction_check(
    sys: &HybridSystem,
    cache: Arc<CenterGraphCache>,
    opts: &StabilityOptions,
) -> Result<ReductionCheck> {
    let sched = cache.setup().schedule().clone();
    let full = classify_stability(sys, &sched, opts)?;
    let mut matched = opts.clone();
    matched.t0 = Some(full.t0_sweep.clone());
    let reduced_sys = build_reduced(Arc::clone(&cache), None)?;
    let reduced = classify_stability(&reduced_sys.system, &sched, &matched)?;
    if let Some(e) = reduced_sys.failure() {
        if reduced.classification != Classification::Unstable {
            return Err(e);
        }
    }
    let agree = full.classification.coarse() == reduced.classification.coarse();
    Ok(ReductionCheck { full, reduced, agree, graph_evaluations: cache.evaluations() })
}
