use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::engine::{run, SimOptions, Sink, StopReason, StopRule};
use super::{Configuration, Particles};
use crate::error::{Error, Result};
use crate::reconstruct::in_n_epsilon;
use crate::rng;
use crate::stats::{lag1_autocorrelation, ratio, ratio_bootstrap_se, Estimate};

/// A function `g` of the configuration whose time integral is accumulated
/// over each excursion.
#[derive(Clone)]
pub enum Functional {
    /// `ℓ(η)^p`.
    CountPower(u32),
    /// Indicator of the void configuration.
    Void,
    /// Indicator of `N(ε)`: some pair of particles is ε-close in a
    /// coordinate.
    NearPair(f64),
    Custom {
        name: String,
        f: Arc<dyn Fn(&Configuration) -> f64 + Send + Sync>,
    },
}

impl Functional {
    pub fn name(&self) -> String {
        match self {
            Functional::CountPower(p) => format!("count^{p}"),
            Functional::Void => "void".into(),
            Functional::NearPair(eps) => format!("near_pair({eps})"),
            Functional::Custom { name, .. } => name.clone(),
        }
    }

    pub fn eval(&self, config: &Configuration) -> f64 {
        match self {
            Functional::CountPower(p) => (config.len() as f64).powi(*p as i32),
            Functional::Void => f64::from(config.is_empty() as u8),
            Functional::NearPair(eps) => f64::from(in_n_epsilon(config, *eps) as u8),
            Functional::Custom { f, .. } => f(config),
        }
    }
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Functional({})", self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegenerativeOptions {
    pub sim: SimOptions,
    /// Excursions longer than this are abandoned.
    pub time_cap: f64,
    pub bootstrap_resamples: usize,
}

impl RegenerativeOptions {
    pub fn new(dt: f64) -> Self {
        Self {
            sim: SimOptions::new(dt),
            time_cap: 1.0e4,
            bootstrap_resamples: 400,
        }
    }
}

/// Per-cycle accumulators of completed excursions from the void
/// configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ExcursionStats {
    pub names: Vec<String>,
    /// Length `R` of each completed cycle.
    pub cycle_lengths: Vec<f64>,
    /// Time spent at `δ` in each cycle.
    pub cycle_void_times: Vec<f64>,
    /// `cycle_integrals[f][k] = ∫_0^{R} g_f(η_s) ds` over cycle `k`.
    pub cycle_integrals: Vec<Vec<f64>>,
    pub abandoned: u64,
    pub bootstrap_resamples: usize,
}

impl ExcursionStats {
    fn empty(functionals: &[Functional], bootstrap_resamples: usize) -> Self {
        Self {
            names: functionals.iter().map(Functional::name).collect(),
            cycle_lengths: Vec::new(),
            cycle_void_times: Vec::new(),
            cycle_integrals: vec![Vec::new(); functionals.len()],
            abandoned: 0,
            bootstrap_resamples,
        }
    }

    pub fn cycle_count(&self) -> usize {
        self.cycle_lengths.len()
    }

    pub fn total_time(&self) -> f64 {
        self.cycle_lengths.iter().sum()
    }

    pub fn time_at_void(&self) -> f64 {
        self.cycle_void_times.iter().sum()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Ratio estimator `Σ_k ∫g / Σ_k R_k` with a cycle-bootstrap SE.
    pub fn estimate(&self, index: usize) -> Estimate {
        self.ratio_estimate(&self.cycle_integrals[index])
    }

    pub fn estimate_named(&self, name: &str) -> Result<Estimate> {
        self.index_of(name)
            .map(|i| self.estimate(i))
            .ok_or_else(|| Error::MissingFunctional(name.to_string()))
    }

    /// Stationary probability of the void configuration.
    pub fn void_fraction(&self) -> Estimate {
        self.ratio_estimate(&self.cycle_void_times)
    }

    /// Mean cycle length `E_δ R_1`.
    pub fn mean_cycle_length(&self) -> Estimate {
        crate::stats::mean_se(&self.cycle_lengths)
    }

    /// Lag-1 autocorrelation of the per-cycle integrals of functional
    /// `index`; near zero for i.i.d. cycles.
    pub fn lag1(&self, index: usize) -> f64 {
        lag1_autocorrelation(&self.cycle_integrals[index])
    }

    fn ratio_estimate(&self, num: &[f64]) -> Estimate {
        // fixed seed: the SE is part of the deterministic output
        let mut boot = rng::stream(0x5EED_B007, num.len() as u64);
        Estimate::new(
            ratio(num, &self.cycle_lengths),
            ratio_bootstrap_se(num, &self.cycle_lengths, self.bootstrap_resamples, &mut boot),
        )
    }

    /// Appends the cycles of `other` (same functionals).
    pub fn merge(&mut self, other: Self) {
        assert_eq!(self.names, other.names, "merging stats of different functionals");
        self.cycle_lengths.extend(other.cycle_lengths);
        self.cycle_void_times.extend(other.cycle_void_times);
        for (a, b) in self.cycle_integrals.iter_mut().zip(other.cycle_integrals) {
            a.extend(b);
        }
        self.abandoned += other.abandoned;
    }
}

struct CycleAccumulator<'a> {
    functionals: &'a [Functional],
    integrals: Vec<f64>,
    void_time: f64,
}

impl Sink for CycleAccumulator<'_> {
    fn interval(&mut self, t0: f64, t1: f64, config: &Configuration) {
        let h = t1 - t0;
        if config.is_empty() {
            self.void_time += h;
        }
        for (acc, f) in self.integrals.iter_mut().zip(self.functionals) {
            *acc += h * f.eval(config);
        }
    }
}

/// Simulates `n_cycles` excursions from `δ` and accumulates the time
/// integrals of `functionals`.
pub fn run_regenerative<R: Rng + ?Sized>(
    spec: &crate::model::ModelSpec,
    n_cycles: usize,
    dt: f64,
    functionals: &[Functional],
    rng: &mut R,
) -> Result<ExcursionStats> {
    run_regenerative_with(spec, n_cycles, &RegenerativeOptions::new(dt), functionals, rng, ())
}

/// As [`run_regenerative`], also streaming every cycle (abandoned ones
/// included) into `extra`.
pub fn run_regenerative_with<R: Rng + ?Sized, S: Sink>(
    spec: &crate::model::ModelSpec,
    n_cycles: usize,
    opts: &RegenerativeOptions,
    functionals: &[Functional],
    rng: &mut R,
    mut extra: S,
) -> Result<ExcursionStats> {
    if n_cycles == 0 {
        return Err(Error::param("n_cycles", "must be at least 1"));
    }
    if spec.immigration_rate <= 0.0 {
        return Err(Error::param("immigration_rate", "regenerative sampling needs c > 0"));
    }
    let mut stats = ExcursionStats::empty(functionals, opts.bootstrap_resamples);
    while stats.cycle_count() < n_cycles {
        let mut acc = CycleAccumulator {
            functionals,
            integrals: vec![0.0; functionals.len()],
            void_time: 0.0,
        };
        let outcome = run(
            spec,
            Configuration::void(spec.dim),
            StopRule::ReturnToVoid { time_cap: opts.time_cap },
            &opts.sim,
            rng,
            (&mut acc, &mut extra),
        );
        match outcome {
            Ok(summary) if summary.reason == StopReason::ReturnedToVoid => {
                stats.cycle_lengths.push(summary.end_time);
                stats.cycle_void_times.push(acc.void_time);
                for (v, x) in stats.cycle_integrals.iter_mut().zip(acc.integrals) {
                    v.push(x);
                }
            }
            Ok(_) | Err(Error::Explosion { .. }) => {
                stats.abandoned += 1;
                if stats.abandoned > n_cycles as u64 {
                    return Err(Error::param(
                        "spec",
                        "more abandoned than completed excursions; the model looks supercritical",
                    ));
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(stats)
}

/// Splits the cycles over `chunks` independent streams of `master_seed`
/// and merges the results in chunk order.
pub fn run_regenerative_par(
    spec: &crate::model::ModelSpec,
    n_cycles: usize,
    opts: &RegenerativeOptions,
    functionals: &[Functional],
    master_seed: u64,
    chunks: usize,
) -> Result<ExcursionStats> {
    let chunks = chunks.clamp(1, n_cycles.max(1));
    let parts: Vec<Result<ExcursionStats>> = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let n = n_cycles / chunks + usize::from(i < n_cycles % chunks);
            let mut rng = rng::stream(master_seed, i as u64);
            run_regenerative_with(spec, n, opts, functionals, &mut rng, ())
        })
        .collect();
    let mut parts = parts.into_iter();
    let mut stats = parts.next().expect("at least one chunk")?;
    for p in parts {
        stats.merge(p?);
    }
    Ok(stats)
}

/// Estimates of `μ(ℓ^p)` for `p = 1..=q`.
pub fn particle_count_moments(stats: &ExcursionStats, q: u32) -> Result<Vec<Estimate>> {
    (1..=q)
        .map(|p| stats.estimate_named(&Functional::CountPower(p).name()))
        .collect()
}
