//! Spectral splitting of the linear part and the explicit constants and
//! smallness conditions that the solver and manifold constructions rely on.

mod conditions;
mod constants;
mod spectral;

pub use conditions::{check_conditions, ConditionEntry, ConditionReport, DIFF_STEP};
pub use constants::{
    compute_constants, default_alpha, gamma_integral, p_constant, ConstantsBundle, Inequality, NEAR_BOUNDARY,
};
pub(crate) use spectral::shifted_growth_constant;
pub use spectral::{spectral_split, spectral_split_with, SpectralSplit, SplitOptions, SplitSummary, MAX_CONDITION};
