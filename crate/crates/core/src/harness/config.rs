//! Experiment configuration files.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::catalog::{build_system, NonlinearitySpec};
use crate::error::{Error, Result};
use crate::manifolds::{CacheOptions, ManifoldOptions};
use crate::reduction::{PhaseOptions, StabilityOptions};
use crate::schedule::{ArgumentSchedule, ScheduleSpec};
use crate::solver::{HybridSystem, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    Simulate,
    ContinueBackward,
    #[serde(rename = "manifold-F")]
    ManifoldF,
    #[serde(rename = "manifold-G")]
    ManifoldG,
    Phase,
    Stability,
    Reduce,
    Conditions,
    Example1,
}

impl Recipe {
    pub const ALL: [Recipe; 9] = [
        Recipe::Simulate,
        Recipe::ContinueBackward,
        Recipe::ManifoldF,
        Recipe::ManifoldG,
        Recipe::Phase,
        Recipe::Stability,
        Recipe::Reduce,
        Recipe::Conditions,
        Recipe::Example1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Recipe::Simulate => "simulate",
            Recipe::ContinueBackward => "continue-backward",
            Recipe::ManifoldF => "manifold-F",
            Recipe::ManifoldG => "manifold-G",
            Recipe::Phase => "phase",
            Recipe::Stability => "stability",
            Recipe::Reduce => "reduce",
            Recipe::Conditions => "conditions",
            Recipe::Example1 => "example1",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Linear part as a row-major array of `n²` entries.
    pub a: Vec<f64>,
    pub nonlinearity: NonlinearitySpec,
    /// Declared constant; defaults to the catalog value.
    #[serde(default)]
    pub lipschitz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Decay rate of the stable graph; default half the spectral gap.
    pub alpha: Option<f64>,
    pub tol_eig: f64,
    pub sigma: Option<f64>,
    /// Random probes for the sampled conditions.
    pub probes: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { alpha: None, tol_eig: 1e-9, sigma: None, probes: 200 }
    }
}

/// Initial data for the trajectory recipes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub t0: f64,
    pub z0: Vec<f64>,
    /// End of the run; before `t0` for backward continuation.
    pub t_end: f64,
    /// Interval whose anchor time starts the manifold and phase recipes.
    pub interval: i64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { t0: 0.0, z0: Vec::new(), t_end: 10.0, interval: 0 }
    }
}

/// Coordinate grid for the manifold dumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphGridConfig {
    pub half_width: f64,
    pub resolution: usize,
}

impl Default for GraphGridConfig {
    fn default() -> Self {
        Self { half_width: 1.0, resolution: 21 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional here; the command line names the recipe.
    #[serde(default)]
    pub recipe: Option<Recipe>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub system: Option<SystemConfig>,
    #[serde(default)]
    pub schedule: Option<ScheduleSpec>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub manifold: ManifoldOptions,
    #[serde(default)]
    pub cache: CacheOptions,
    #[serde(default)]
    pub graph: GraphGridConfig,
    #[serde(default)]
    pub stability: StabilityOptions,
    #[serde(default)]
    pub phase: PhaseOptions,
    #[serde(default)]
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Command-line overrides: the seed reaches every seeded component,
    /// step and tolerance reach every integrator and iteration.
    pub fn apply_overrides(&mut self, seed: Option<u64>, step: Option<f64>, tol: Option<f64>) {
        if let Some(seed) = seed {
            self.seed = seed;
            if let Some(ScheduleSpec::Randomized { seed: s, .. }) = self.schedule.as_mut() {
                *s = seed;
            }
        }
        if let Some(step) = step {
            self.solver.step = step;
            self.stability.solver.step = step;
            self.phase.solver.step = step;
        }
        if let Some(tol) = tol {
            self.solver.tol = tol;
            self.stability.solver.tol = tol;
            self.phase.solver.tol = tol;
            self.manifold.tol = tol;
        }
        self.stability.seed = self.seed;
    }

    /// Checks everything that can be checked without numerics.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("`{name}` must be positive, got {v}")))
            }
        };
        for (name, s) in [("solver", &self.solver), ("stability.solver", &self.stability.solver), ("phase.solver", &self.phase.solver)] {
            positive(&format!("{name}.step"), s.step)?;
            positive(&format!("{name}.tol"), s.tol)?;
            if s.max_iter == 0 {
                return Err(Error::Config(format!("`{name}.max_iter` must be at least 1")));
            }
        }
        positive("manifold.step", self.manifold.step)?;
        positive("manifold.tol", self.manifold.tol)?;
        positive("cache.half_width", self.cache.half_width)?;
        positive("graph.half_width", self.graph.half_width)?;
        positive("phase.tol", self.phase.tol)?;
        if self.cache.resolution < 2 || self.graph.resolution < 2 {
            return Err(Error::Config("grid resolutions must be at least 2".into()));
        }
        if self.stability.radii.is_empty() {
            return Err(Error::Config("`stability.radii` must not be empty".into()));
        }
        for &r in &self.stability.radii {
            positive("stability.radii", r)?;
        }
        if let Some(h) = self.stability.horizon {
            positive("stability.horizon", h)?;
        }
        if let Some(alpha) = self.analysis.alpha {
            positive("analysis.alpha", alpha)?;
        }
        if let Some(sys) = &self.system {
            let n = (sys.a.len() as f64).sqrt().round() as usize;
            if n == 0 || n * n != sys.a.len() {
                return Err(Error::Config(format!("`system.a` has {} entries, not a square count", sys.a.len())));
            }
            if !self.run.z0.is_empty() && self.run.z0.len() != n {
                return Err(Error::Config(format!("`run.z0` has length {}, expected {n}", self.run.z0.len())));
            }
        }
        Ok(())
    }

    /// The system and whether its nonlinearity ignores `t`.
    pub fn build_system(&self) -> Result<(HybridSystem, bool)> {
        let sys = self.system.as_ref().ok_or_else(|| Error::Config("missing `system`".into()))?;
        let n = (sys.a.len() as f64).sqrt().round() as usize;
        if n == 0 || n * n != sys.a.len() {
            return Err(Error::Config(format!("`system.a` has {} entries, not a square count", sys.a.len())));
        }
        let a = DMatrix::from_row_slice(n, n, &sys.a);
        build_system(a, &sys.nonlinearity, sys.lipschitz).map_err(|e| match e {
            Error::InvalidSystem(msg) => Error::Config(msg),
            other => other,
        })
    }

    pub fn build_schedule(&self) -> Result<ArgumentSchedule> {
        let spec = self.schedule.as_ref().ok_or_else(|| Error::Config("missing `schedule`".into()))?;
        ArgumentSchedule::from_spec(spec).map_err(|e| Error::Config(e.to_string()))
    }
}
