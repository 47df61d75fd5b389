//! Numerical toolkit for quasilinear differential equations with piecewise
//! constant argument of generalized type,
//!
//! ```text
//! z' = A z + f(t, z(t), z(β(t))),    β(t) = ζ_i  for t ∈ [θ_i, θ_{i+1}),
//! ```
//!
//! where the anchor `ζ_i` may sit anywhere in its interval, so the equation
//! is alternately of advanced and retarded type.
//!
//! * [`schedule`]: the sequences `θ_i`, `ζ_i` and the map `β`.
//! * [`solver`]: RK4 interval integration and continuation in both directions.
//! * [`analysis`]: spectral splitting of `A` and the smallness constants.
//! * [`manifolds`]: stable (`v = F(t, u)`) and center (`u = G(t, v)`) integral
//!   surfaces by Picard iteration.
//! * [`reduction`]: asymptotic phase, sampled stability verdicts and the
//!   reduction to the center surface.
//! * [`harness`]: config-driven experiment recipes behind the `epcag` binary.

pub mod analysis;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod manifolds;
pub mod reduction;
pub mod schedule;
pub mod solver;

pub use error::{Error, Result};
pub use schedule::{ArgumentSchedule, ScheduleSpec};
pub use solver::{HybridSystem, SolverOptions, Trajectory};
