//! Config-driven experiment recipes behind the `epcag` binary.
//!
//! A run writes `manifest` first, then the recipe's CSV files, then
//! `report.json`. Failures still produce a report with a tagged error
//! record and map to exit status 2 (configuration) or 3 (numerics).

pub mod catalog;
pub mod config;
mod recipes;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

pub use catalog::{build_nonlinearity, build_system, catalog_list, CatalogEntry, NonlinearitySpec, ParamInfo};
pub use config::{AnalysisConfig, ExperimentConfig, GraphGridConfig, Recipe, RunConfig, SystemConfig};

use crate::error::{Error, Result};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 1;

/// Output directory plus an optional echo of tables to stdout.
pub struct Outputs {
    dir: PathBuf,
    quiet: bool,
}

impl Outputs {
    pub fn new(dir: &Path, quiet: bool) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), quiet })
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        Ok(())
    }

    pub fn say(&self, text: &str) {
        if !self.quiet {
            print!("{text}");
        }
    }
}

/// Machine-readable failure description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub module: &'static str,
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl ErrorRecord {
    pub fn from_error(e: &Error) -> Self {
        let (module, kind) = match e {
            Error::WindowExceeded { .. } => ("schedule", "window-exceeded"),
            Error::InvalidSchedule { .. } => ("schedule", "invalid-schedule"),
            Error::InvalidParameter { .. } => ("harness", "invalid-parameter"),
            Error::InvalidSystem(_) => ("solver", "invalid-system"),
            Error::BlowUp { .. } => ("solver", "blow-up"),
            Error::NonContraction { .. } => ("solver", "non-contraction"),
            Error::PositiveSpectrum { .. } => ("analysis", "positive-spectrum"),
            Error::IllConditioned { .. } => ("analysis", "ill-conditioned"),
            Error::SmallnessViolated(_) => ("manifolds", "smallness-violated"),
            Error::Divergence { .. } => ("manifolds", "divergence"),
            Error::BoxExceeded { .. } => ("manifolds", "box-exceeded"),
            Error::ContractionFailure { .. } => ("reduction", "contraction-failure"),
            Error::DegenerateDimension(_) => ("reduction", "degenerate-dimension"),
            Error::Config(_) => ("harness", "config"),
            Error::Io(_) => ("harness", "io"),
        };
        Self { module, kind, message: e.to_string(), exit_code: exit_code(e) }
    }
}

/// Exit status for an error: configuration problems are 2, I/O is 1,
/// everything raised by the numerics is 3.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter { .. } | Error::InvalidSchedule { .. } | Error::InvalidSystem(_) => {
            EXIT_CONFIG
        }
        Error::Io(_) => EXIT_IO,
        _ => EXIT_NUMERIC,
    }
}

fn manifest(recipe: Recipe, cfg: &ExperimentConfig) -> String {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let config = serde_json::to_string_pretty(cfg).unwrap_or_default();
    format!(
        "epcag {}\nrecipe {}\nseed {}\ntimestamp {stamp}\nconfig\n{config}\n",
        env!("CARGO_PKG_VERSION"),
        recipe.name(),
        cfg.seed
    )
}

/// Runs a recipe and returns its report section.
pub fn run(recipe: Recipe, cfg: &ExperimentConfig, out: &Outputs) -> Result<Value> {
    if let Some(r) = cfg.recipe {
        if r != recipe {
            return Err(Error::Config(format!("config is for recipe `{}`, not `{}`", r.name(), recipe.name())));
        }
    }
    cfg.validate()?;
    match recipe {
        Recipe::Simulate => recipes::simulate(cfg, out),
        Recipe::ContinueBackward => recipes::continue_backward(cfg, out),
        Recipe::ManifoldF => recipes::manifold_f(cfg, out),
        Recipe::ManifoldG => recipes::manifold_g(cfg, out),
        Recipe::Phase => recipes::phase(cfg, out),
        Recipe::Stability => recipes::stability(cfg, out),
        Recipe::Reduce => recipes::reduce(cfg, out),
        Recipe::Conditions => recipes::conditions(cfg, out),
        Recipe::Example1 => recipes::example1(cfg, out),
    }
}

/// Full command: manifest, recipe, report. Returns the exit status.
pub fn execute(recipe: Recipe, cfg: &ExperimentConfig, dir: &Path, quiet: bool) -> i32 {
    let out = match Outputs::new(dir, quiet) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("epcag: {e}");
            return exit_code(&e);
        }
    };
    if let Err(e) = out.write("manifest", &manifest(recipe, cfg)) {
        eprintln!("epcag: {e}");
        return exit_code(&e);
    }
    let (report, code) = match run(recipe, cfg, &out) {
        Ok(results) => (json!({ "recipe": recipe.name(), "status": "ok", "results": results }), 0),
        Err(e) => {
            let record = ErrorRecord::from_error(&e);
            eprintln!("epcag: [{}] {}", record.module, record.message);
            let code = record.exit_code;
            (json!({ "recipe": recipe.name(), "status": "error", "error": record }), code)
        }
    };
    let text = serde_json::to_string_pretty(&report).unwrap_or_default();
    if let Err(e) = out.write("report.json", &(text + "\n")) {
        eprintln!("epcag: {e}");
        return if code == 0 { exit_code(&e) } else { code };
    }
    code
}

/// Reads a config file, applies flag overrides and runs.
pub fn execute_file(
    recipe: Recipe,
    config: &Path,
    dir: &Path,
    overrides: (Option<u64>, Option<f64>, Option<f64>),
    quiet: bool,
) -> i32 {
    match ExperimentConfig::load(config) {
        Ok(mut cfg) => {
            cfg.apply_overrides(overrides.0, overrides.1, overrides.2);
            execute(recipe, &cfg, dir, quiet)
        }
        Err(e) => {
            eprintln!("epcag: {e}");
            if let Ok(out) = Outputs::new(dir, quiet) {
                let record = ErrorRecord::from_error(&e);
                let report = json!({ "recipe": recipe.name(), "status": "error", "error": record });
                let _ = out.write("report.json", &(serde_json::to_string_pretty(&report).unwrap_or_default() + "\n"));
            }
            exit_code(&e)
        }
    }
}
