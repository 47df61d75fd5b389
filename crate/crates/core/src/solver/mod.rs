//! Interval-wise integration and continuation of the hybrid system.
//!
//! Inside `[θ_i, θ_{i+1})` the anchored argument is the single vector
//! `w = z(ζ_i)`, so the equation is an ODE once `w` is known. When the datum
//! lies on the other side of `ζ_i` from the unknown, `w` is implicit and is
//! found by fixed-point iteration of the interval flow.

mod anchor;
mod continuation;
mod integrate;
mod system;

pub use anchor::{solve_anchor, AnchorSolution, SolverOptions};
pub use continuation::{solve_backward, solve_forward, Direction, IntervalReport, Trajectory};
pub use integrate::{integrate_interval, Segment};
pub use system::{AnchoredNonlinearity, HybridSystem, Nonlinearity, PROBE_RADIUS};

pub(crate) use continuation::march_forward;
