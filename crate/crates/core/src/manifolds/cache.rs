//! Memoized center graph on a time × coordinate grid with multilinear
//! interpolation.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::graph::ManifoldSetup;
use crate::error::{Error, Result};

/// Resolution and extent of the cached center graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacheOptions {
    /// Coordinates are cached on `[−half_width, half_width]` per axis.
    pub half_width: f64,
    /// Nodes per coordinate axis (odd keeps a node at the origin).
    pub resolution: usize,
    /// Uniform time nodes per schedule interval, in addition to `ζ_i`.
    pub time_nodes: usize,
    /// The nonlinearity does not depend on `t`; together with a periodic
    /// schedule this lets one period of nodes serve the whole window.
    pub autonomous: bool,
}

impl Default for CacheOptions {
    fn default() -> Self {
        Self { half_width: 1.0, resolution: 41, time_nodes: 4, autonomous: false }
    }
}

type NodeKey = (i64, usize, Vec<usize>);

/// Lazily filled table of `G(t, v)` values.
#[derive(Debug)]
pub struct CenterGraphCache {
    setup: ManifoldSetup,
    opts: CacheOptions,
    /// `(p, shift)` when node values may be shared across periods.
    period: Option<(usize, f64)>,
    /// First interval whose backward horizon fits in the window.
    base: i64,
    values: Mutex<HashMap<NodeKey, DVector<f64>>>,
    evaluations: AtomicUsize,
}

impl CenterGraphCache {
    pub fn new(setup: ManifoldSetup, opts: CacheOptions) -> Result<Self> {
        if !(opts.half_width > 0.0) || opts.resolution < 2 || opts.time_nodes < 1 {
            return Err(Error::InvalidParameter {
                name: "cache",
                reason: "need half_width > 0, resolution >= 2, time_nodes >= 1".into(),
            });
        }
        let sched = setup.schedule();
        let period = if opts.autonomous { sched.period() } else { None };
        let earliest = sched.span().0 + setup.center_horizon();
        let base = sched.intervals().find(|&i| sched.theta(i) >= earliest).unwrap_or(sched.i_max());
        Ok(Self { setup, opts, period, base, values: Mutex::new(HashMap::new()), evaluations: AtomicUsize::new(0) })
    }

    pub fn setup(&self) -> &ManifoldSetup {
        &self.setup
    }

    pub fn options(&self) -> &CacheOptions {
        &self.opts
    }

    /// Number of graph evaluations performed so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }

    /// Interpolated `G(t, v)`.
    pub fn eval(&self, t: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        let k = self.setup.split().k;
        let c = self.setup.split().center_dim();
        if v.len() != c {
            return Err(Error::InvalidParameter { name: "v", reason: format!("expected length {c}, got {}", v.len()) });
        }
        if k == 0 {
            return Ok(DVector::zeros(0));
        }
        let w = self.opts.half_width;
        if let Some(&bad) = v.iter().find(|x| x.abs() > w * (1.0 + 1e-12)) {
            return Err(Error::BoxExceeded { value: bad, half_width: w });
        }

        let sched = self.setup.schedule();
        let i = sched.interval_index(t)?;
        let (rep, t_rep) = match self.period {
            Some((p, shift)) => {
                let rep = self.base + (i - self.base).rem_euclid(p as i64);
                let periods = (rep - i) / p as i64;
                (rep, t + periods as f64 * shift)
            }
            None => (i, t),
        };
        let nodes = self.time_nodes(rep);
        let above = nodes.partition_point(|&s| s <= t_rep).clamp(1, nodes.len() - 1);
        let (j0, j1) = (above - 1, above);
        let span = nodes[j1] - nodes[j0];
        let wt = if span > 0.0 { ((t_rep - nodes[j0]) / span).clamp(0.0, 1.0) } else { 0.0 };

        let m = self.opts.resolution - 1;
        let h = 2.0 * w / m as f64;
        let mut lower = Vec::with_capacity(c);
        let mut frac = Vec::with_capacity(c);
        for x in v.iter() {
            let pos = ((x + w) / h).clamp(0.0, m as f64);
            let cell = (pos.floor() as usize).min(m - 1);
            lower.push(cell);
            frac.push(pos - cell as f64);
        }

        let mut out = DVector::zeros(k);
        for (j, tw) in [(j0, 1.0 - wt), (j1, wt)] {
            if tw == 0.0 {
                continue;
            }
            for corner in 0..(1usize << c) {
                let mut weight = tw;
                let mut idx = Vec::with_capacity(c);
                for d in 0..c {
                    let up = (corner >> d) & 1 == 1;
                    weight *= if up { frac[d] } else { 1.0 - frac[d] };
                    idx.push(lower[d] + up as usize);
                }
                if weight == 0.0 {
                    continue;
                }
                out += self.node_value(rep, j, nodes[j], idx)? * weight;
            }
        }
        Ok(out)
    }

    fn time_nodes(&self, i: i64) -> Vec<f64> {
        let sched = self.setup.schedule();
        let (a, b) = sched.interval(i);
        let m = self.opts.time_nodes;
        let mut nodes: Vec<f64> = (0..=m).map(|j| a + (b - a) * j as f64 / m as f64).collect();
        nodes[m] = b;
        nodes.push(sched.zeta(i));
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + y.abs()));
        nodes
    }

    fn node_value(&self, i: i64, j: usize, t: f64, idx: Vec<usize>) -> Result<DVector<f64>> {
        let key = (i, j, idx);
        if let Some(v) = self.values.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let w = self.opts.half_width;
        let h = 2.0 * w / (self.opts.resolution - 1) as f64;
        let d = DVector::from_iterator(key.2.len(), key.2.iter().map(|&q| -w + h * q as f64));
        let value = self.setup.eval_g(t, &d)?.value;
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        self.values.lock().unwrap().insert(key, value.clone());
        Ok(value)
    }
}
