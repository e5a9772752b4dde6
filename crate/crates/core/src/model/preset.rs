//! Config-file representation of models and the built-in presets.
//!
//! A model table may name a `preset`; any other keys override the preset
//! field by field. Sub-tables carrying a `kind` key (drift, volatility,
//! kill, scatter, immigration, fallback) replace the preset's table as a
//! whole when the kind changes.

use serde::{Deserialize, Serialize};

use super::{Drift, KillRate, ModelSpec, OffspringLaw, PointLaw, Scatter, Volatility};
use crate::error::{Error, Result};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriftConfig {
    Zero,
    Constant { value: Vec<f64> },
    Ou { rate: f64, mean: Vec<f64> },
    Tanh { strength: f64, center: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VolatilityConfig {
    Constant { value: f64 },
    Diagonal { values: Vec<f64> },
    Sine { base: f64, amplitude: f64, frequency: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KillConfig {
    Constant { value: f64 },
    /// Piecewise constant along `axis`, one value per region.
    Regions { axis: usize, thresholds: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffspringConfig {
    /// Position-independent law `p_0, p_1, …`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,
    /// One law per region when `thresholds` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laws: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScatterConfig {
    Local,
    Gaussian { scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LawConfig {
    Dirac { at: Vec<f64> },
    Gaussian { mean: Vec<f64>, scale: f64 },
    Uniform { low: Vec<f64>, high: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default = "default_name")]
    pub name: String,
    pub dim: usize,
    pub drift: DriftConfig,
    pub volatility: VolatilityConfig,
    pub kill: KillConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kill_rate_bound: Option<f64>,
    pub offspring: OffspringConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_bound: Option<f64>,
    pub scatter: ScatterConfig,
    pub immigration_rate: f64,
    pub immigration: LawConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<LawConfig>,
    #[serde(default = "one")]
    pub lipschitz_hint: f64,
}

fn default_name() -> String {
    "custom".into()
}

fn one() -> f64 {
    1.0
}

impl LawConfig {
    fn to_law(&self) -> PointLaw {
        match self.clone() {
            LawConfig::Dirac { at } => PointLaw::Dirac(at),
            LawConfig::Gaussian { mean, scale } => PointLaw::Gaussian { mean, scale },
            LawConfig::Uniform { low, high } => PointLaw::Uniform { low, high },
        }
    }
}

impl ModelConfig {
    /// Resolves a raw TOML model table: applies the named preset (if any)
    /// and then the table's own keys on top.
    pub fn from_toml(value: &toml::Value) -> Result<Self> {
        let table = value
            .as_table()
            .ok_or_else(|| Error::Config("model must be a table".into()))?;
        let merged = match table.get("preset") {
            Some(name) => {
                let name = name
                    .as_str()
                    .ok_or_else(|| Error::Config("preset must be a string".into()))?;
                let base = preset_config(name)?;
                let mut base = toml::Value::try_from(base).map_err(|e| Error::Config(e.to_string()))?;
                merge(&mut base, value);
                base
            }
            None => value.clone(),
        };
        merged
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<ModelSpec> {
        let drift = match self.drift.clone() {
            DriftConfig::Zero => Drift::Zero,
            DriftConfig::Constant { value } => Drift::Constant(value),
            DriftConfig::Ou { rate, mean } => Drift::OrnsteinUhlenbeck { rate, mean },
            DriftConfig::Tanh { strength, center } => Drift::Tanh { strength, center },
        };
        let volatility = match self.volatility.clone() {
            VolatilityConfig::Constant { value } => Volatility::Constant(value),
            VolatilityConfig::Diagonal { values } => Volatility::Diagonal(values),
            VolatilityConfig::Sine {
                base,
                amplitude,
                frequency,
            } => Volatility::Sine {
                base,
                amplitude,
                frequency,
            },
        };
        let kill_rate = match self.kill.clone() {
            KillConfig::Constant { value } => KillRate::Constant(value),
            KillConfig::Regions { axis, thresholds, values } => {
                if values.len() != thresholds.len() + 1 || axis >= self.dim {
                    return Err(Error::Config("kill regions: need one value per region".into()));
                }
                if values.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::param("kill", "region rates must be positive"));
                }
                KillRate::Custom(Arc::new(move |y| values[thresholds.partition_point(|t| *t <= y[axis])]))
            }
        };
        let kill_rate_bound = self.kill_rate_bound.or(match &self.kill {
            KillConfig::Regions { values, .. } => Some(values.iter().cloned().fold(0.0, f64::max)),
            KillConfig::Constant { .. } => None,
        });
        let offspring = match &self.offspring {
            OffspringConfig {
                probs: Some(p),
                thresholds: None,
                laws: None,
                ..
            } => OffspringLaw::Constant(p.clone()),
            OffspringConfig {
                probs: None,
                thresholds: Some(t),
                laws: Some(l),
                axis,
            } => OffspringLaw::Regions {
                axis: axis.unwrap_or(0),
                thresholds: t.clone(),
                laws: l.clone(),
            },
            _ => {
                return Err(Error::Config(
                    "offspring: give either `probs` or `thresholds` + `laws`".into(),
                ))
            }
        };
        let scatter = match self.scatter {
            ScatterConfig::Local => Scatter::Local,
            ScatterConfig::Gaussian { scale } => Scatter::GaussianProduct { scale },
        };
        let mut b = ModelSpec::builder(self.dim)
            .name(self.name.clone())
            .drift(drift)
            .volatility(volatility)
            .kill_rate(kill_rate)
            .offspring(offspring)
            .scatter(scatter)
            .immigration(self.immigration_rate, self.immigration.to_law())
            .lipschitz_hint(self.lipschitz_hint);
        if let Some(k) = kill_rate_bound {
            b = b.kill_rate_bound(k);
        }
        if let Some(r) = self.rho_bound {
            b = b.rho_bound(r);
        }
        if let Some(f) = &self.fallback {
            b = b.fallback_law(f.to_law());
        }
        b.build()
    }
}

/// Recursive merge of `overlay` into `base`. Tables with a differing
/// `kind` are replaced instead of merged.
fn merge(base: &mut toml::Value, overlay: &toml::Value) {
    match (base, overlay) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(existing) if existing.is_table() && v.is_table() => {
                        let kind_changed = v.get("kind").is_some() && existing.get("kind") != v.get("kind");
                        if kind_changed {
                            *existing = v.clone();
                        } else {
                            merge(existing, v);
                        }
                    }
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

pub fn preset_names() -> &'static [&'static str] {
    &[
        "pure-death-bm",
        "mm-inf",
        "binary-half",
        "binary-spread",
        "reconstruct-demo",
        "sigma-sine",
    ]
}

fn bm(
    name: &str,
    c: f64,
    probs: Vec<f64>,
    scatter: ScatterConfig,
    sigma: f64,
    immigration: LawConfig,
) -> ModelConfig {
    ModelConfig {
        preset: None,
        name: name.into(),
        dim: 1,
        drift: DriftConfig::Zero,
        volatility: VolatilityConfig::Constant { value: sigma },
        kill: KillConfig::Constant { value: 1.0 },
        kill_rate_bound: None,
        offspring: OffspringConfig {
            probs: Some(probs),
            axis: None,
            thresholds: None,
            laws: None,
        },
        rho_bound: None,
        scatter,
        immigration_rate: c,
        immigration,
        fallback: None,
        lipschitz_hint: 1.0,
    }
}

/// Config of a built-in preset.
pub fn preset_config(name: &str) -> Result<ModelConfig> {
    let origin = LawConfig::Dirac { at: vec![0.0] };
    let cfg = match name {
        // Brownian particles immigrating at 0, dying at rate 1 without offspring.
        "pure-death-bm" => bm(name, 1.0, vec![1.0], ScatterConfig::Local, 1.0, origin),
        // Particle count is the M/M/∞ queue with arrival rate 2, service rate 1.
        "mm-inf" => bm(name, 2.0, vec![1.0], ScatterConfig::Local, 1.0, origin),
        // Subcritical local binary branching, ρ = 1/2.
        "binary-half" => bm(name, 1.0, vec![0.75, 0.0, 0.25], ScatterConfig::Local, 1.0, origin),
        // Non-local binary branching with spread-out immigrants.
        "binary-spread" => bm(
            name,
            2.0,
            vec![0.75, 0.0, 0.25],
            ScatterConfig::Gaussian { scale: 0.5 },
            1.0,
            LawConfig::Gaussian {
                mean: vec![0.0],
                scale: 1.0,
            },
        ),
        // Sparse, slowly moving particles: death or a short relocation jump.
        "reconstruct-demo" => bm(
            name,
            0.3,
            vec![0.5, 0.5],
            ScatterConfig::Gaussian { scale: 0.05 },
            0.3,
            LawConfig::Gaussian {
                mean: vec![0.0],
                scale: 4.0,
            },
        ),
        // σ²(x) = 1 + 0.25 sin x with a bounded restoring drift.
        "sigma-sine" => ModelConfig {
            drift: DriftConfig::Tanh {
                strength: 0.5,
                center: vec![0.5],
            },
            volatility: VolatilityConfig::Sine {
                base: 1.0,
                amplitude: 0.25,
                frequency: 1.0,
            },
            ..bm(
                name,
                2.0,
                vec![0.9, 0.0, 0.1],
                ScatterConfig::Gaussian { scale: 0.2 },
                1.0,
                LawConfig::Uniform {
                    low: vec![-0.25],
                    high: vec![1.25],
                },
            )
        },
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}` (known: {})",
                preset_names().join(", ")
            )))
        }
    };
    Ok(cfg)
}

pub fn builtin_preset(name: &str) -> Result<ModelSpec> {
    preset_config(name)?.build()
}
