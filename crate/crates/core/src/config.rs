//! Versioned JSON experiment configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalogue;
use crate::error::{Error, Result};
use crate::markov_map::{MapSpec, MarkovMap};
use crate::roof::{RoofFunction, RoofSpec};
use crate::system::System;
use crate::transfer::DEFAULT_NODES;

pub const SCHEMA_VERSION: u32 = 1;

/// A catalogue name or an inline specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecRef<T> {
    Named(String),
    Inline(T),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    #[serde(default = "default_observable")]
    pub e: String,
    #[serde(default = "default_observable")]
    pub f: String,
    #[serde(default = "yes")]
    pub centered: bool,
}

impl Default for ObservableConfig {
    fn default() -> Self {
        ObservableConfig {
            e: default_observable(),
            f: default_observable(),
            centered: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_max: f64,
    #[serde(default = "default_out_step")]
    pub step: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid {
            t_max: 40.0,
            step: default_out_step(),
            dt: default_dt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_target")]
    pub target: f64,
    #[serde(default = "default_cap")]
    pub cap: usize,
    /// Number of random `s` for the Laplace route comparison; 0 disables it.
    #[serde(default = "default_routes")]
    pub route_samples: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            n_grid: default_n_grid(),
            target: default_target(),
            cap: default_cap(),
            route_samples: default_routes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniConfig {
    #[serde(default = "default_depth")]
    pub max_depth: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
    pub threshold: Option<f64>,
    /// Contraction iterations for the cancellation measurement.
    #[serde(default = "default_n_iter")]
    pub n_iter: usize,
}

impl Default for UniConfig {
    fn default() -> Self {
        UniConfig {
            max_depth: default_depth(),
            budget: default_budget(),
            threshold: None,
            n_iter: default_n_iter(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// `<map>-<roof>` catalogue name; excludes `map` and `roof`.
    pub preset: Option<String>,
    pub map: Option<SpecRef<MapSpec>>,
    pub roof: Option<SpecRef<RoofSpec>>,
    /// Overrides the map's Hölder exponent.
    pub alpha: Option<f64>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default)]
    pub observables: ObservableConfig,
    #[serde(default)]
    pub t_grid: TimeGrid,
    #[serde(default = "default_b_grid")]
    pub b_grid: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub uni: UniConfig,
}

fn default_observable() -> String {
    "sin_ur".into()
}
fn yes() -> bool {
    true
}
fn default_out_step() -> f64 {
    0.05
}
fn default_dt() -> f64 {
    0.005
}
fn default_n_grid() -> Vec<usize> {
    (1..=12).collect()
}
fn default_target() -> f64 {
    0.75
}
fn default_cap() -> usize {
    1000
}
fn default_routes() -> usize {
    5
}
fn default_depth() -> usize {
    6
}
fn default_budget() -> usize {
    crate::uni::DEFAULT_BUDGET
}
fn default_n_iter() -> usize {
    3
}
fn default_nodes() -> usize {
    DEFAULT_NODES
}
fn default_b_grid() -> Vec<f64> {
    vec![10.0, 30.0, 100.0, 300.0, 1000.0]
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// A default configuration for a catalogue preset.
    pub fn for_preset(name: &str) -> ExperimentConfig {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            preset: Some(name.to_string()),
            map: None,
            roof: None,
            alpha: None,
            nodes: default_nodes(),
            observables: ObservableConfig::default(),
            t_grid: TimeGrid::default(),
            b_grid: default_b_grid(),
            seed: 0,
            output_dir: default_out(),
            spectral: SpectralConfig::default(),
            uni: UniConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a file and resolves a relative `output_dir` against its directory.
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if cfg.output_dir.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.output_dir = dir.join(&cfg.output_dir);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        match (&self.preset, &self.map, &self.roof) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => {}
            (Some(_), _, _) => return fail("'preset' excludes 'map' and 'roof'".into()),
            _ => return fail("either 'preset' or both 'map' and 'roof' are required".into()),
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return fail(format!("alpha must lie in (0, 1], got {a}"));
            }
        }
        if self.nodes < 3 {
            return fail(format!("nodes must be at least 3, got {}", self.nodes));
        }
        let tg = &self.t_grid;
        if !(tg.t_max >= 0.0 && tg.step > 0.0 && tg.dt > 0.0) {
            return fail(format!("invalid t_grid {tg:?}"));
        }
        if self.b_grid.iter().any(|b| !b.is_finite()) {
            return fail("b_grid entries must be finite".into());
        }
        if self.spectral.n_grid.contains(&0) {
            return fail("n_grid entries must be positive".into());
        }
        if !(self.spectral.target > 0.0 && self.spectral.target < 1.0) {
            return fail(format!("target must lie in (0, 1), got {}", self.spectral.target));
        }
        Ok(())
    }

    /// Builds the map and roof described by the configuration.
    pub fn build(&self) -> Result<(Arc<MarkovMap>, Arc<RoofFunction>)> {
        let mut map_spec = match (&self.preset, &self.map) {
            (Some(p), _) => {
                let (m, _) = catalogue::preset(p)?;
                m
            }
            (None, Some(SpecRef::Named(n))) => catalogue::map_spec(n)?,
            (None, Some(SpecRef::Inline(s))) => s.clone(),
            (None, None) => return Err(Error::Config("no map given".into())),
        };
        if let Some(a) = self.alpha {
            map_spec.alpha = a;
        }
        let roof_spec = match (&self.preset, &self.roof) {
            (Some(p), _) => catalogue::preset(p)?.1,
            (None, Some(SpecRef::Named(n))) => catalogue::roof_spec(n)?,
            (None, Some(SpecRef::Inline(s))) => s.clone(),
            (None, None) => return Err(Error::Config("no roof given".into())),
        };
        let map = Arc::new(MarkovMap::build(&map_spec)?);
        let roof = Arc::new(RoofFunction::from_spec(&roof_spec, &map)?);
        Ok((map, roof))
    }

    pub fn system(&self) -> Result<System> {
        let (map, roof) = self.build()?;
        System::new(map, roof, self.nodes)
    }

    /// Canonical JSON, the input of the configuration hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_preset_config() {
        let cfg = ExperimentConfig::from_json(r#"{"schema_version": 1, "preset": "doub2-quadratic"}"#).unwrap();
        assert_eq!(cfg.nodes, DEFAULT_NODES);
        assert_eq!(cfg.observables.e, "sin_ur");
        let (map, roof) = cfg.build().unwrap();
        assert_eq!(map.len(), 2);
        assert!((roof.eval(1.0) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn inline_and_named_specs() {
        let text = r#"{
            "schema_version": 1,
            "map": "tri3",
            "roof": {"family": "kink", "base": 1.0, "slope": 0.5, "center": 0.5},
            "alpha": 0.7,
            "nodes": 65
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let (map, roof) = cfg.build().unwrap();
        assert_eq!(map.len(), 3);
        assert_eq!(map.alpha(), 0.7);
        assert!((roof.eval(0.5) - 1.0).abs() < 1e-15);
        let round = ExperimentConfig::from_json(&cfg.canonical_json()).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn schema_errors_are_config_errors() {
        for bad in [
            r#"{"preset": "doub2-constant"}"#,
            r#"{"schema_version": 2, "preset": "doub2-constant"}"#,
            r#"{"schema_version": 1}"#,
            r#"{"schema_version": 1, "preset": "doub2-constant", "roof": "linear"}"#,
            r#"{"schema_version": 1, "preset": "doub2-constant", "nodez": 3}"#,
            r#"{"schema_version": 1, "preset": "doub2-constant", "nodes": 2}"#,
            r#"{"schema_version": 1, "preset": "doub2-constant", "alpha": 1.5}"#,
            "not json",
        ] {
            let err = ExperimentConfig::from_json(bad).unwrap_err();
            assert!(err.is_config(), "{bad}: {err}");
        }
        let cfg = ExperimentConfig::from_json(r#"{"schema_version": 1, "preset": "quad-roof"}"#).unwrap();
        assert!(cfg.build().unwrap_err().is_config());
    }
}
