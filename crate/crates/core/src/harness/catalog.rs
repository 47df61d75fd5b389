//! Built-in nonlinearities, selected by name with numeric parameters.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{AnchoredNonlinearity, HybridSystem};

/// Name plus parameter overrides, as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl NonlinearitySpec {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_string(), params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamInfo {
    pub name: &'static str,
    pub default: f64,
    pub meaning: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub formula: &'static str,
    /// Required state dimension, if any.
    pub dimension: Option<usize>,
    pub params: Vec<ParamInfo>,
    pub lipschitz: &'static str,
    /// Does not read `t`.
    pub autonomous: bool,
}

const fn param(name: &'static str, default: f64, meaning: &'static str) -> ParamInfo {
    ParamInfo { name, default, meaning }
}

/// Every registered nonlinearity with its parameters and Lipschitz constant.
pub fn catalog_list() -> Vec<CatalogEntry> {
    let cubic_params = vec![
        param("a", 0.005, "weight of s(v)^2 in the stable equation"),
        param("b", 0.016, "weight of the cubic anchored term"),
        param("c", 0.005, "weight of the s(u)s(v) coupling"),
        param("radius", 0.5, "saturation level R of s = clamp(-R, R)"),
    ];
    vec![
        CatalogEntry {
            name: "zero",
            formula: "f = 0",
            dimension: None,
            params: vec![],
            lipschitz: "0",
            autonomous: true,
        },
        CatalogEntry {
            name: "example1-quadratic",
            formula: "f(t, z, w) = -w^2",
            dimension: Some(1),
            params: vec![param("radius", 2.0, "states are assumed to stay in [-radius, radius]")],
            lipschitz: "2 radius (on the ball only)",
            autonomous: true,
        },
        CatalogEntry {
            name: "epca-linear",
            formula: "f(t, z, w) = b w",
            dimension: None,
            params: vec![param("b", 0.25, "gain on the anchored value")],
            lipschitz: "|b|",
            autonomous: true,
        },
        CatalogEntry {
            name: "damped-cubic",
            formula: "f = (a s(v)^2, -b s(w_v)^3 + c s(u) s(v))",
            dimension: Some(2),
            params: cubic_params.clone(),
            lipschitz: "max(2 R (a + c), 3 b R^2)",
            autonomous: true,
        },
        CatalogEntry {
            name: "anti-damped-cubic",
            formula: "f = (a s(v)^2, +b s(w_v)^3 + c s(u) s(v))",
            dimension: Some(2),
            params: cubic_params,
            lipschitz: "max(2 R (a + c), 3 b R^2)",
            autonomous: true,
        },
        CatalogEntry {
            name: "tanh-coupled",
            formula: "f = eps (tanh(w_2), tanh(z_1))",
            dimension: Some(2),
            params: vec![param("eps", 0.01, "coupling strength")],
            lipschitz: "eps",
            autonomous: true,
        },
    ]
}

/// A catalog nonlinearity ready to put into a system.
pub struct BuiltNonlinearity {
    pub f: Arc<AnchoredNonlinearity>,
    pub lipschitz: f64,
    pub autonomous: bool,
    /// Globally Lipschitz, so the declared constant can be probed.
    pub global: bool,
}

/// Resolves a spec for a state of dimension `n`.
pub fn build_nonlinearity(spec: &NonlinearitySpec, n: usize) -> Result<BuiltNonlinearity> {
    let entry = catalog_list()
        .into_iter()
        .find(|e| e.name == spec.name)
        .ok_or_else(|| Error::Config(format!("unknown nonlinearity `{}`", spec.name)))?;
    if let Some(unknown) = spec.params.keys().find(|k| !entry.params.iter().any(|p| p.name == k.as_str())) {
        return Err(Error::Config(format!("`{}` has no parameter `{unknown}`", entry.name)));
    }
    if let Some(d) = entry.dimension {
        if d != n {
            return Err(Error::Config(format!("`{}` needs dimension {d}, the matrix has {n}", entry.name)));
        }
    }
    let get = |key: &str| -> Result<f64> {
        let default = entry.params.iter().find(|p| p.name == key).map(|p| p.default).unwrap_or(0.0);
        let v = spec.params.get(key).copied().unwrap_or(default);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Config(format!("parameter `{key}` must be finite")))
        }
    };
    let nonneg = |key: &str| -> Result<f64> {
        let v = get(key)?;
        if v < 0.0 {
            return Err(Error::Config(format!("parameter `{key}` must be >= 0")));
        }
        Ok(v)
    };

    let (f, lipschitz, global): (Arc<AnchoredNonlinearity>, f64, bool) = match entry.name {
        "zero" => (Arc::new(move |_, _, _, _| DVector::zeros(n)), 0.0, true),
        "example1-quadratic" => {
            let r = get("radius")?;
            if !(r > 0.0) {
                return Err(Error::Config("parameter `radius` must be positive".into()));
            }
            (Arc::new(|_, _, w: &DVector<f64>, _| DVector::from_element(1, -w[0] * w[0])), 2.0 * r, false)
        }
        "epca-linear" => {
            let b = get("b")?;
            (Arc::new(move |_, _, w: &DVector<f64>, _| w * b), b.abs(), true)
        }
        "damped-cubic" | "anti-damped-cubic" => {
            let (a, b, c, r) = (nonneg("a")?, nonneg("b")?, nonneg("c")?, get("radius")?);
            if !(r > 0.0) {
                return Err(Error::Config("parameter `radius` must be positive".into()));
            }
            let sign = if entry.name == "damped-cubic" { -1.0 } else { 1.0 };
            let s = move |x: f64| x.clamp(-r, r);
            let f = move |_: f64, z: &DVector<f64>, w: &DVector<f64>, _: f64| {
                let (u, v, wv) = (s(z[0]), s(z[1]), s(w[1]));
                DVector::from_vec(vec![a * v * v, sign * b * wv.powi(3) + c * u * v])
            };
            (Arc::new(f), (2.0 * r * (a + c)).max(3.0 * b * r * r), true)
        }
        "tanh-coupled" => {
            let eps = nonneg("eps")?;
            let f = move |_: f64, z: &DVector<f64>, w: &DVector<f64>, _: f64| {
                DVector::from_vec(vec![eps * w[1].tanh(), eps * z[0].tanh()])
            };
            (Arc::new(f), eps, true)
        }
        other => unreachable!("catalog entry `{other}` has no builder"),
    };
    Ok(BuiltNonlinearity { f, lipschitz, autonomous: entry.autonomous, global })
}

/// System `z' = A z + f` from a catalog spec. A declared constant below the
/// analytic one is rejected; a larger one is kept.
pub fn build_system(a: DMatrix<f64>, spec: &NonlinearitySpec, lipschitz: Option<f64>) -> Result<(HybridSystem, bool)> {
    let built = build_nonlinearity(spec, a.nrows())?;
    let l = match lipschitz {
        Some(l) if l + 1e-15 < built.lipschitz => {
            return Err(Error::Config(format!(
                "declared Lipschitz constant {l} is below the analytic value {} for `{}`",
                built.lipschitz, spec.name
            )))
        }
        Some(l) => l,
        None => built.lipschitz,
    };
    let sys = HybridSystem::from_arc(a, l, Arc::clone(&built.f))?;
    if built.global {
        let observed = sys.sampled_lipschitz(200, 1.0, 7);
        if observed > l * (1.0 + 1e-6) + 1e-12 {
            return Err(Error::InvalidSystem(format!("sampled ratio {observed} exceeds {l} for `{}`", spec.name)));
        }
    }
    Ok((sys, built.autonomous))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listing_has_documented_entries() {
        let list = catalog_list();
        let zero = list.iter().find(|e| e.name == "zero").unwrap();
        assert_eq!(zero.lipschitz, "0");
        assert!(list.iter().any(|e| e.name == "example1-quadratic" && e.formula.contains("-w^2")));
        assert!(list.iter().any(|e| e.name == "epca-linear" && e.formula.contains("b w")));
    }

    #[test]
    fn every_global_entry_respects_its_constant() {
        for entry in catalog_list() {
            let n = entry.dimension.unwrap_or(2);
            let a = DMatrix::from_diagonal_element(n, n, -1.0);
            let spec = NonlinearitySpec::new(entry.name);
            let (sys, _) = build_system(a, &spec, None).unwrap();
            let zero = DVector::zeros(n);
            assert_eq!(sys.f(0.0, &zero, &zero).norm(), 0.0, "{}", entry.name);
            let probe = sys.sampled_lipschitz(2000, 2.0, 11);
            if entry.name != "example1-quadratic" {
                assert!(probe <= sys.lipschitz() * (1.0 + 1e-9), "{}: {probe}", entry.name);
            }
        }
    }

    #[test]
    fn cubic_constant_is_attained_near_saturation() {
        let spec = NonlinearitySpec::new("damped-cubic").with("b", 0.1).with("a", 0.0).with("c", 0.0);
        let (sys, _) = build_system(DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 0.0])), &spec, None).unwrap();
        let z = DVector::zeros(2);
        let w1 = DVector::from_vec(vec![0.0, 0.5]);
        let w2 = DVector::from_vec(vec![0.0, 0.499]);
        let slope = (sys.f(0.0, &z, &w1) - sys.f(0.0, &z, &w2)).norm() / 0.001;
        assert!((slope / sys.lipschitz() - 1.0).abs() < 0.01);
    }

    #[test]
    fn bad_specs_are_config_errors() {
        let a = DMatrix::from_diagonal_element(2, 2, -1.0);
        for spec in [
            NonlinearitySpec::new("nope"),
            NonlinearitySpec::new("tanh-coupled").with("gain", 1.0),
            NonlinearitySpec::new("example1-quadratic"),
            NonlinearitySpec::new("damped-cubic").with("b", -1.0),
        ] {
            assert!(matches!(build_system(a.clone(), &spec, None), Err(Error::Config(_))), "{spec:?}");
        }
        let low = build_system(a, &NonlinearitySpec::new("tanh-coupled"), Some(0.001));
        assert!(matches!(low, Err(Error::Config(_))));
    }
}
