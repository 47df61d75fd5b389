//! Piecewise-uniform time grids aligned to the schedule, and the exponential
//! kernel quadrature used inside each Picard sweep.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::expm_t;
use crate::schedule::ArgumentSchedule;

/// Uniform run of nodes between two consecutive breakpoints, with an even
/// number of panels so that Simpson pairs tile it exactly.
#[derive(Debug, Clone)]
pub(crate) struct Span {
    /// Global index of the first node.
    pub start: usize,
    pub panels: usize,
    pub h: f64,
    /// Anchor time `ζ_j` of the interval containing the span.
    pub zeta: f64,
    /// Global index of the node at `zeta`.
    pub zeta_node: usize,
}

impl Span {
    pub fn end(&self) -> usize {
        self.start + self.panels
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Grid {
    pub ts: Vec<f64>,
    pub spans: Vec<Span>,
}

impl Grid {
    /// Grid on `[lo, hi]` with breakpoints at every `θ_j`, `ζ_j` inside and at
    /// `extra`; no panel is longer than `h_max`.
    pub fn build(sched: &ArgumentSchedule, lo: f64, hi: f64, extra: &[f64], h_max: f64) -> Result<Self> {
        let (w_lo, w_hi) = sched.span();
        if lo < w_lo || hi > w_hi {
            return Err(Error::WindowExceeded { t: if lo < w_lo { lo } else { hi }, lo: w_lo, hi: w_hi });
        }
        let merge = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        let mut breaks = vec![lo, hi];
        breaks.extend(sched.thetas().iter().copied().filter(|&t| lo < t && t < hi));
        breaks.extend(sched.zetas().iter().copied().filter(|&t| lo < t && t < hi));
        breaks.extend(extra.iter().copied().filter(|&t| lo < t && t < hi));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|b, a| (*b - *a).abs() <= merge);
        if let Some(last) = breaks.last_mut() {
            *last = hi;
        }

        let mut ts = vec![lo];
        let mut spans = Vec::with_capacity(breaks.len());
        let mut break_nodes = vec![0usize];
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = ((b - a) / (2.0 * h_max)).ceil().max(1.0) as usize;
            let panels = 2 * half;
            let h = (b - a) / panels as f64;
            let start = ts.len() - 1;
            for j in 1..panels {
                ts.push(a + h * j as f64);
            }
            ts.push(b);
            break_nodes.push(ts.len() - 1);
            let i = sched.interval_index(0.5 * (a + b))?;
            spans.push(Span { start, panels, h, zeta: sched.zeta(i), zeta_node: usize::MAX });
        }
        for span in &mut spans {
            let k = breaks
                .iter()
                .position(|&b| (b - span.zeta).abs() <= merge)
                .ok_or_else(|| Error::WindowExceeded { t: span.zeta, lo, hi })?;
            span.zeta_node = break_nodes[k];
        }
        Ok(Self { ts, spans })
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    /// Global index of the node at time `t`, which must be a breakpoint.
    pub fn node_at(&self, t: f64) -> Option<usize> {
        let merge = 1e-12 * (1.0 + t.abs());
        std::iter::once(0)
            .chain(self.spans.iter().map(Span::end))
            .find(|&j| (self.ts[j] - t).abs() <= merge)
    }
}

/// `e^{Ph}, e^{−Ph}, e^{2Ph}, e^{−2Ph}` for every span.
pub(crate) struct Propagators {
    per_span: Vec<[DMatrix<f64>; 4]>,
}

impl Propagators {
    pub fn new(grid: &Grid, p: &DMatrix<f64>) -> Self {
        let per_span = grid
            .spans
            .iter()
            .map(|s| [expm_t(p, s.h), expm_t(p, -s.h), expm_t(p, 2.0 * s.h), expm_t(p, -2.0 * s.h)])
            .collect();
        Self { per_span }
    }
}

/// Solves `x' = Px + g(t)` on the grid with `x(t_b) = x_b` at the span
/// endpoint `boundary`, marching away from it in both directions.
///
/// `g[s][j]` is the forcing at local node `j` of span `s`; on each pair of
/// panels the integrand `e^{P(t−s)}g(s)` is replaced by its quadratic
/// interpolant, giving fourth order at the even nodes.
pub(crate) fn solve_linear(
    grid: &Grid,
    prop: &Propagators,
    g: &[Vec<DVector<f64>>],
    boundary: usize,
    value: &DVector<f64>,
) -> Vec<DVector<f64>> {
    let mut x = vec![DVector::zeros(value.len()); grid.len()];
    x[boundary] = value.clone();
    if value.is_empty() {
        return x;
    }
    for (s, span) in grid.spans.iter().enumerate() {
        if span.start < boundary {
            continue;
        }
        let [e1, em1, e2, _] = &prop.per_span[s];
        let h = span.h;
        for pair in 0..span.panels / 2 {
            let j = span.start + 2 * pair;
            let (g0, g1, g2) = (&g[s][2 * pair], &g[s][2 * pair + 1], &g[s][2 * pair + 2]);
            let half = e1 * &x[j] + (e1 * g0 * 5.0 + g1 * 8.0 - em1 * g2) * (h / 12.0);
            let full = e2 * &x[j] + (e2 * g0 + e1 * g1 * 4.0 + g2) * (h / 3.0);
            x[j + 1] = half;
            x[j + 2] = full;
        }
    }
    for (s, span) in grid.spans.iter().enumerate().rev() {
        if span.end() > boundary {
            continue;
        }
        let [e1, em1, _, em2] = &prop.per_span[s];
        let h = span.h;
        for pair in (0..span.panels / 2).rev() {
            let j = span.start + 2 * pair;
            let (g0, g1, g2) = (&g[s][2 * pair], &g[s][2 * pair + 1], &g[s][2 * pair + 2]);
            let half = em1 * &x[j + 2] - (g1 * 8.0 + em1 * g2 * 5.0 - e1 * g0) * (h / 12.0);
            let full = em2 * &x[j + 2] - (g0 + em1 * g1 * 4.0 + em2 * g2) * (h / 3.0);
            x[j + 1] = half;
            x[j] = full;
        }
    }
    x
}
