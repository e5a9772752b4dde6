use rand::Rng;
use serde::Serialize;

use super::ModelSpec;
use crate::error::{Error, Result};

/// Half-width of the box sampled uniformly (alongside immigration draws).
const SAMPLE_RADIUS: f64 = 5.0;
const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    NonPositiveKillRate,
    KillRateAboveBound,
    RhoAboveBound,
    Normalization,
    NonFinite,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub point: Vec<f64>,
    pub kind: ViolationKind,
    pub value: f64,
}

/// Outcome of spot-checking the declared model assumptions.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub n_sampled: usize,
    pub violations: Vec<Violation>,
    /// Sampled minimum of `κ(y)(1 - ρ(y))`; negative values hint at local
    /// supercriticality.
    pub min_subcriticality: f64,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

/// Samples `sample_budget` points (alternating between the immigration law
/// and a uniform box around the origin) and checks positivity of `κ`, the
/// declared bounds on `κ` and `ρ`, and normalisation of the offspring law.
///
/// Probabilities outside `[0, 1]` are a hard error rather than a reported
/// violation.
pub fn validate_spec<R: Rng + ?Sized>(spec: &ModelSpec, sample_budget: usize, rng: &mut R) -> Result<ValidationReport> {
    if sample_budget == 0 {
        return Err(Error::param("sample_budget", "must be at least 1"));
    }
    let d = spec.dim;
    let mut y = vec![0.0; d];
    let mut buf = Vec::new();
    let mut violations = Vec::new();
    let mut min_sub = f64::INFINITY;
    for i in 0..sample_budget {
        if i % 2 == 0 {
            spec.sample_immigrant(rng, &mut y);
        } else {
            for c in y.iter_mut() {
                *c = rng.gen_range(-SAMPLE_RADIUS..=SAMPLE_RADIUS);
            }
        }
        let mut flag = |kind, value| {
            violations.push(Violation {
                point: y.clone(),
                kind,
                value,
            })
        };
        let kappa = spec.kill_rate_at(&y);
        if !kappa.is_finite() {
            flag(ViolationKind::NonFinite, kappa);
            continue;
        }
        if kappa <= 0.0 {
            flag(ViolationKind::NonPositiveKillRate, kappa);
        } else if kappa > spec.kill_rate_bound {
            flag(ViolationKind::KillRateAboveBound, kappa);
        }
        let probs = spec.offspring_probs(&y, &mut buf);
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::param("offspring", format!("probability {p} outside [0, 1] at {y:?}")));
        }
        let total: f64 = probs.iter().sum();
        let rho: f64 = probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            flag(ViolationKind::Normalization, total);
        }
        if rho > spec.rho_bound {
            flag(ViolationKind::RhoAboveBound, rho);
        }
        min_sub = min_sub.min(kappa * (1.0 - rho));
    }
    Ok(ValidationReport {
        n_sampled: sample_budget,
        violations,
        min_subcriticality: min_sub,
    })
}
