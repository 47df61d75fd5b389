//! Successive approximations for two-block integral systems on a grid.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::grid::{solve_linear, Grid, Propagators};
use crate::error::{Error, Result};
use crate::linalg::{concat, split_at};

/// Nonlinearity in block coordinates `y = (x, y)`: `(t, y, y(anchor), anchor)`.
pub(crate) type BlockFn = dyn Fn(f64, &DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync;

/// `x' = P x + g_x`, `y' = Q y + g_y`, each block pinned at one grid node.
pub(crate) struct TwoBlockProblem<'a> {
    pub grid: &'a Grid,
    pub first: &'a DMatrix<f64>,
    pub second: &'a DMatrix<f64>,
    pub g: Arc<BlockFn>,
    pub first_pin: (usize, DVector<f64>),
    pub second_pin: (usize, DVector<f64>),
}

pub(crate) struct PicardOutcome {
    pub states: Vec<DVector<f64>>,
    pub deltas: Vec<f64>,
}

/// Iterates `z_{m+1} = Φ(z_m)` from `init` until the sup-norm change drops
/// below `tol`. Two consecutive increases of the change count as divergence.
pub(crate) fn iterate(
    problem: &TwoBlockProblem<'_>,
    init: Vec<DVector<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<PicardOutcome> {
    let grid = problem.grid;
    let k = problem.first.nrows();
    let first_prop = Propagators::new(grid, problem.first);
    let second_prop = Propagators::new(grid, problem.second);
    let mut z = init;
    let mut deltas: Vec<f64> = Vec::new();
    let mut rises = 0;
    for _ in 0..max_iter {
        let mut gx = Vec::with_capacity(grid.spans.len());
        let mut gy = Vec::with_capacity(grid.spans.len());
        for span in &grid.spans {
            let anchor = &z[span.zeta_node];
            let (mut xs, mut ys) = (Vec::with_capacity(span.panels + 1), Vec::with_capacity(span.panels + 1));
            for j in span.start..=span.end() {
                let (a, b) = split_at(&(problem.g)(grid.ts[j], &z[j], anchor, span.zeta), k);
                xs.push(a);
                ys.push(b);
            }
            gx.push(xs);
            gy.push(ys);
        }
        let x = solve_linear(grid, &first_prop, &gx, problem.first_pin.0, &problem.first_pin.1);
        let y = solve_linear(grid, &second_prop, &gy, problem.second_pin.0, &problem.second_pin.1);
        let next: Vec<DVector<f64>> = x.iter().zip(&y).map(|(a, b)| concat(a, b)).collect();
        let delta = next.iter().zip(&z).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        z = next;
        if !delta.is_finite() {
            deltas.push(delta);
            return Err(Error::Divergence { iterates: deltas.len(), deltas });
        }
        if let Some(&prev) = deltas.last() {
            rises = if delta > prev { rises + 1 } else { 0 };
        }
        deltas.push(delta);
        if delta < tol {
            return Ok(PicardOutcome { states: z, deltas });
        }
        if rises >= 2 {
            return Err(Error::Divergence { iterates: deltas.len(), deltas });
        }
    }
    Err(Error::Divergence { iterates: deltas.len(), deltas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::ArgumentSchedule;

    /// Constant forcing does not depend on the state, so the second sweep
    /// reproduces the first.
    #[test]
    fn state_independent_forcing_converges_in_two_sweeps() {
        let sched = ArgumentSchedule::epca(0, 6).unwrap();
        let grid = Grid::build(&sched, 0.0, 6.0, &[], 0.1).unwrap();
        let p = DMatrix::from_element(1, 1, -1.0);
        let q = DMatrix::from_element(1, 1, 0.0);
        let problem = TwoBlockProblem {
            grid: &grid,
            first: &p,
            second: &q,
            g: Arc::new(|_, _, _, _| DVector::from_vec(vec![1.0, 1.0])),
            first_pin: (0, DVector::from_element(1, 0.0)),
            second_pin: (grid.len() - 1, DVector::from_element(1, 0.0)),
        };
        let out = iterate(&problem, vec![DVector::zeros(2); grid.len()], 1e-12, 10).unwrap();
        assert_eq!(out.deltas.len(), 2);
        // x = 1 - e^{-t}, y = t - 6
        for (t, z) in grid.ts.iter().zip(&out.states) {
            assert!((z[0] - (1.0 - (-t).exp())).abs() < 1e-5, "{t} {}", z[0]);
            assert!((z[1] - (t - 6.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn expanding_map_diverges() {
        let sched = ArgumentSchedule::epca(0, 4).unwrap();
        let grid = Grid::build(&sched, 0.0, 4.0, &[], 0.1).unwrap();
        let p = DMatrix::from_element(1, 1, -1.0);
        let q = DMatrix::from_element(1, 1, 0.0);
        let problem = TwoBlockProblem {
            grid: &grid,
            first: &p,
            second: &q,
            g: Arc::new(|_, z, _, _| z * 3.0),
            first_pin: (0, DVector::from_element(1, 1.0)),
            second_pin: (grid.len() - 1, DVector::from_element(1, 0.0)),
        };
        let err = iterate(&problem, vec![DVector::zeros(2); grid.len()], 1e-12, 50).err().unwrap();
        assert!(matches!(err, Error::Divergence { .. }));
    }
}
