use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelSpec};

/// Experiment settings shared by all subcommands; each subcommand reads
/// the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Model table: `preset = "<name>"` plus field overrides.
    pub model: toml::Value,
    /// Euler step for `simulate`, `occupation`, `moments` and `verify`.
    pub dt: f64,
    pub horizon: f64,
    pub cycles: usize,
    /// Highest power `p` of `μ(ℓ^p)` reported by `moments`.
    pub q: u32,
    pub box_low: f64,
    pub box_high: f64,
    pub bin_width: f64,
    /// Observation step for `simulate`, `scheme` and `estimate`.
    pub delta: f64,
    /// Observation steps for `reconstruct` and `sweep`.
    pub deltas: Vec<f64>,
    pub lambda: f64,
    pub beta: f64,
    pub cube_low: f64,
    pub cube_high: f64,
    /// Estimation point; defaults to the cube center.
    pub a: Option<f64>,
    pub replicates: usize,
    pub dt_ratio: f64,
    pub time_cap: f64,
    /// Observed pairs per `Δ` in `reconstruct`.
    pub pairs: u64,
    pub paths: usize,
    pub max_population: usize,
    pub max_events: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut model = toml::Table::new();
        model.insert("preset".into(), toml::Value::String("pure-death-bm".into()));
        Self {
            seed: 0,
            model: toml::Value::Table(model),
            dt: 0.01,
            horizon: 10.0,
            cycles: 2000,
            q: 2,
            box_low: -2.0,
            box_high: 2.0,
            bin_width: 0.05,
            delta: 0.01,
            deltas: vec![0.02, 0.01, 0.005],
            lambda: 0.475,
            beta: 2.0,
            cube_low: 0.0,
            cube_high: 1.0,
            a: None,
            replicates: 50,
            dt_ratio: 20.0,
            time_cap: 1000.0,
            pairs: 20_000,
            paths: 20_000,
            max_population: 100_000,
            max_events: 1_000_000,
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Applies `key.path=value`; the value is read as TOML, falling back to a
/// bare string.
pub fn apply_override(root: &mut toml::Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut node = root;
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{key}: {part:?} is not inside a table")))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), parse_value(raw.trim()));
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Reads an optional TOML file, applies overrides and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut root = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                toml::from_str::<toml::Value>(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Value::Table(toml::Table::new()),
        };
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        let cfg: Self = root.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, name: &str, reason: &str| if ok { Ok(()) } else { Err(Error::param(name, reason)) };
        check(self.lambda > 0.0 && self.lambda < 0.5, "lambda", "must lie in (0, 1/2)")?;
        check(self.delta > 0.0, "delta", "must be positive")?;
        check(!self.deltas.is_empty() && self.deltas.iter().all(|&d| d > 0.0), "deltas", "must be a nonempty list of positive steps")?;
        check(self.dt > 0.0, "dt", "must be positive")?;
        check(self.horizon > 0.0, "horizon", "must be positive")?;
        check(self.cycles >= 1, "cycles", "must be at least 1")?;
        check(self.q >= 1, "q", "must be at least 1")?;
        check(self.box_high > self.box_low && self.bin_width > 0.0, "box", "needs box_low < box_high and bin_width > 0")?;
        check(self.cube_high > self.cube_low, "cube", "needs cube_low < cube_high")?;
        check(self.dt_ratio >= 1.0, "dt_ratio", "must be at least 1")?;
        check(self.replicates >= 1, "replicates", "must be at least 1")?;
        check(self.time_cap > 0.0, "time_cap", "must be positive")?;
        check(self.paths >= 2, "paths", "must be at least 2")?;
        check(self.beta >= 2.0, "beta", "must be at least 2")?;
        self.model_config()?;
        Ok(())
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        ModelConfig::from_toml(&self.model)
    }

    pub fn model(&self) -> Result<ModelSpec> {
        self.model_config()?.build()
    }

    pub fn estimation_point(&self) -> f64 {
        self.a.unwrap_or(0.5 * (self.cube_low + self.cube_high))
    }

    /// Effective settings as flat `key=value` pairs, with the model table
    /// resolved against its preset.
    pub fn header_pairs(&self) -> Result<Vec<(String, String)>> {
        let mut resolved = self.clone();
        resolved.model = toml::Value::try_from(self.model_config()?).map_err(|e| Error::Config(e.to_string()))?;
        let value = toml::Value::try_from(&resolved).map_err(|e| Error::Config(e.to_string()))?;
        let mut out = Vec::new();
        flatten("", &value, &mut out);
        Ok(out)
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, x) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_fields() {
        let cfg = ExperimentConfig::load(
            None,
            &[
                "model.preset=binary-spread".into(),
                "model.immigration_rate=3.5".into(),
                "deltas=[0.1, 0.05]".into(),
                "seed=42".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.deltas, vec![0.1, 0.05]);
        let spec = cfg.model().unwrap();
        assert_eq!(spec.immigration_rate, 3.5);
        assert_eq!(spec.name, "binary-spread");
    }

    #[test]
    fn invalid_fields_are_named() {
        let err = ExperimentConfig::load(None, &["lambda=0.7".into()]).unwrap_err();
        assert!(err.to_string().contains("lambda"), "{err}");
        let err = ExperimentConfig::load(None, &["lamda=0.3".into()]).unwrap_err();
        assert!(err.to_string().contains("lamda"), "{err}");
        assert!(ExperimentConfig::load(None, &["model.preset=nope".into()]).is_err());
    }

    #[test]
    fn header_is_flat_and_resolved() {
        let cfg = ExperimentConfig::default();
        let h = cfg.header_pairs().unwrap();
        assert!(h.iter().any(|(k, v)| k == "model.immigration_rate" && v == "1.0"));
        assert!(h.iter().any(|(k, _)| k == "seed"));
    }
}
