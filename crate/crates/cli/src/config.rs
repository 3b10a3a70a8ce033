//! Experiment configuration files.
//!
//! A config is a TOML document: a handful of top-level keys, a `[weights]`
//! section, an optional `[output]` section, an operation-specific `[params]`
//! table, and for sweeps a `[sweep]` table mapping parameter paths to lists.

use std::path::{Path, PathBuf};

use fractal_trace::measures::DEFAULT_BUDGET;
use fractal_trace::{Fractal, FractalKind, WeightParams};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const OPERATIONS: [&str; 10] = [
    "measure",
    "doubling",
    "ap",
    "codimension",
    "shell",
    "whitney",
    "extension",
    "trace",
    "maximal",
    "ratio",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub operation: String,
    pub fractal: FractalKind,
    /// Polygon level of the snowflake surrogate; ignored for the other fractals.
    #[serde(default = "default_koch_level")]
    pub koch_level: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Operation default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    pub weights: Weights,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub params: toml::Table,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<toml::Table>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub alpha: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_q")]
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// File stem; defaults to the operation name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_dir(), name: None }
    }
}

fn default_koch_level() -> u32 {
    fractal_trace::geometry::DEFAULT_KOCH_LEVEL
}
fn default_seed() -> u64 {
    1
}
fn default_budget() -> usize {
    DEFAULT_BUDGET
}
fn default_p() -> f64 {
    2.0
}
fn default_theta() -> f64 {
    0.5
}
fn default_q() -> f64 {
    1.5
}
fn default_dir() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn from_str(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Invalid(format!("malformed config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !OPERATIONS.contains(&self.operation.as_str()) {
            return Err(CliError::Invalid(format!(
                "unknown operation `{}` (expected one of {})",
                self.operation,
                OPERATIONS.join(", ")
            )));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(CliError::Invalid(format!("tol = {t} must lie in (0, 1)")));
            }
        }
        if self.budget == 0 {
            return Err(CliError::Invalid("budget must be positive".into()));
        }
        if self.fractal == FractalKind::Koch && !(1..=fractal_trace::geometry::koch::MAX_LEVEL).contains(&self.koch_level) {
            return Err(CliError::Invalid(format!("koch_level {} out of range", self.koch_level)));
        }
        self.weight_params()?;
        Ok(())
    }

    pub fn fractal(&self) -> Result<Fractal, CliError> {
        Ok(match self.fractal {
            FractalKind::Koch => Fractal::koch(self.koch_level)?,
            kind => Fractal::from_kind(kind)?,
        })
    }

    pub fn weight_params(&self) -> Result<WeightParams, CliError> {
        let w = self.weights;
        WeightParams::new(&fractal_trace::FractalSpec::from_kind(self.fractal), w.alpha, w.p, w.theta, w.q)
            .map_err(|e| CliError::Invalid(e.to_string()))
    }

    /// Operation parameters, rejecting unknown keys.
    pub fn params<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        toml::Value::Table(self.params.clone())
            .try_into()
            .map_err(|e| CliError::Invalid(format!("[params] for `{}`: {e}", self.operation)))
    }

    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    pub fn stem(&self) -> String {
        self.output.name.clone().unwrap_or_else(|| self.operation.clone())
    }

    /// Expands the `[sweep]` table into one config per grid point, in
    /// lexicographic order of the keys with the last key varying fastest.
    pub fn grid(&self) -> Result<Vec<GridPoint>, CliError> {
        let table = match &self.sweep {
            Some(t) if !t.is_empty() => t,
            _ => return Err(CliError::Invalid("sweep needs a nonempty [sweep] table".into())),
        };
        let mut axes: Vec<(String, Vec<toml::Value>)> = Vec::new();
        for (key, values) in table {
            let values = match values {
                toml::Value::Array(v) if !v.is_empty() => v.clone(),
                toml::Value::Array(_) => return Err(CliError::Invalid(format!("sweep axis `{key}` is empty"))),
                v => vec![v.clone()],
            };
            axes.push((key.clone(), values));
        }
        let mut base = toml::Value::try_from(self).map_err(|e| CliError::Failed(e.to_string()))?;
        if let toml::Value::Table(t) = &mut base {
            t.remove("sweep");
        }
        let mut points = Vec::new();
        let total: usize = axes.iter().map(|a| a.1.len()).product();
        for flat in 0..total {
            let mut rem = flat;
            let mut assignment = Vec::with_capacity(axes.len());
            for (key, values) in axes.iter().rev() {
                assignment.push((key.clone(), values[rem % values.len()].clone()));
                rem /= values.len();
            }
            assignment.reverse();
            let mut value = base.clone();
            for (key, v) in &assignment {
                set_path(&mut value, &resolve(key), v.clone())?;
            }
            let config = value
                .try_into::<ExperimentConfig>()
                .map_err(|e| CliError::Invalid(format!("grid point {flat}: {e}")))
                .and_then(|c| c.validate().map(|_| c));
            points.push(GridPoint { index: flat, assignment, config });
        }
        Ok(points)
    }
}

pub struct GridPoint {
    pub index: usize,
    pub assignment: Vec<(String, toml::Value)>,
    /// A point whose config does not validate becomes a failed row.
    pub config: Result<ExperimentConfig, CliError>,
}

const TOP_LEVEL: [&str; 6] = ["fractal", "koch_level", "seed", "tol", "budget", "operation"];
const WEIGHTS: [&str; 4] = ["alpha", "p", "theta", "q"];

/// Bare sweep keys name a top-level key, a weight, or else a parameter.
fn resolve(key: &str) -> Vec<String> {
    if key.contains('.') {
        return key.split('.').map(str::to_string).collect();
    }
    if TOP_LEVEL.contains(&key) {
        vec![key.to_string()]
    } else if WEIGHTS.contains(&key) {
        vec!["weights".into(), key.to_string()]
    } else {
        vec!["params".into(), key.to_string()]
    }
}

fn set_path(root: &mut toml::Value, path: &[String], v: toml::Value) -> Result<(), CliError> {
    let mut cur = root;
    for (i, part) in path.iter().enumerate() {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| CliError::Invalid(format!("sweep key `{}` does not address a table", path.join("."))))?;
        if i + 1 == path.len() {
            table.insert(part.clone(), v);
            return Ok(());
        }
        cur = table.entry(part.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    Err(CliError::Invalid("empty sweep key".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
operation = "doubling"
fractal = "carpet"
[weights]
alpha = -0.05
"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_str(BASE).unwrap();
        assert_eq!(c.seed, 1);
        assert_eq!(c.weights.p, 2.0);
        assert_eq!(c.stem(), "doubling");
        assert!(c.params.is_empty());
    }

    #[test]
    fn rejects_unknown_things() {
        assert!(matches!(
            ExperimentConfig::from_str(&BASE.replace("doubling", "nope")),
            Err(CliError::Invalid(_))
        ));
        assert!(ExperimentConfig::from_str(&format!("{BASE}bogus = 1\n")).is_err());
        assert!(ExperimentConfig::from_str(&BASE.replace("carpet", "cantor")).is_err());
        assert!(ExperimentConfig::from_str(&format!("{BASE}theta = 1.5\n")).is_err());
    }

    #[test]
    fn grid_is_a_cross_product() {
        let text = format!("{BASE}[sweep]\nalpha = [-0.09, 0.0]\nseed = [1, 2, 3]\n");
        let c = ExperimentConfig::from_str(&text).unwrap();
        let g = c.grid().unwrap();
        assert_eq!(g.len(), 6);
        let first = g[0].config.as_ref().unwrap();
        assert_eq!((first.weights.alpha, first.seed), (-0.09, 1));
        let last = g[5].config.as_ref().unwrap();
        assert_eq!((last.weights.alpha, last.seed), (0.0, 3));
        assert!(last.sweep.is_none());
    }

    #[test]
    fn empty_grid_is_invalid() {
        let c = ExperimentConfig::from_str(BASE).unwrap();
        assert!(matches!(c.grid(), Err(CliError::Invalid(_))));
        let c = ExperimentConfig::from_str(&format!("{BASE}[sweep]\nalpha = []\n")).unwrap();
        assert!(matches!(c.grid(), Err(CliError::Invalid(_))));
    }

    #[test]
    fn bad_grid_point_is_kept_as_a_row() {
        let c = ExperimentConfig::from_str(&format!("{BASE}[sweep]\ntheta = [0.5, 2.0]\n")).unwrap();
        let g = c.grid().unwrap();
        assert!(g[0].config.is_ok());
        assert!(matches!(g[1].config, Err(CliError::Invalid(_))));
    }

    #[test]
    fn dotted_keys_reach_params() {
        let c = ExperimentConfig::from_str(&format!("{BASE}[sweep]\n\"params.n\" = [10]\n")).unwrap();
        let g = c.grid().unwrap();
        assert_eq!(g[0].config.as_ref().unwrap().params["n"].as_integer(), Some(10));
    }
}
