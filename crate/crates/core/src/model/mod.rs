//! Model specification of a branching diffusion with immigration.
//!
//! A [`ModelSpec`] bundles the one-particle motion (drift `b`, volatility
//! `σ`), the position-dependent kill rate `κ`, the offspring law
//! `(p_k(y))_k` with finite support, the scatter kernel placing children
//! relative to their parent, and the immigration mechanism (rate `c`,
//! location law). Declared global bounds on `κ` and `ρ` drive thinning.

mod preset;
mod validate;

pub use preset::{
    builtin_preset, preset_names, DriftConfig, KillConfig, LawConfig, ModelConfig,
    OffspringConfig, ScatterConfig, VolatilityConfig,
};
pub use validate::{validate_spec, ValidationReport, Violation, ViolationKind};

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// `y ↦ v ∈ R^d` written into the output slice.
pub type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// `y ↦ f(y) ∈ R`.
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// `(y, k, rng, out)`: appends `k·d` offsets to `out`.
pub type ScatterFn = Arc<dyn Fn(&[f64], usize, &mut dyn RngCore, &mut Vec<f64>) + Send + Sync>;
/// `(rng, out)`: writes a point of `E` into `out`.
pub type PointSampler = Arc<dyn Fn(&mut dyn RngCore, &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub enum Drift {
    Zero,
    Constant(Vec<f64>),
    /// `b(x) = -rate (x - mean)`.
    OrnsteinUhlenbeck { rate: f64, mean: Vec<f64> },
    /// `b_i(x) = -strength · tanh(x_i - center_i)`; bounded and Lipschitz.
    Tanh { strength: f64, center: Vec<f64> },
    Custom(VectorFn),
}

#[derive(Clone)]
pub enum Volatility {
    /// `σ = s · I`.
    Constant(f64),
    Diagonal(Vec<f64>),
    /// Diagonal with `σ_ii(x)² = base + amplitude · sin(frequency · x_i)`.
    Sine { base: f64, amplitude: f64, frequency: f64 },
    /// Full `d×d` matrix, row-major.
    Custom(VectorFn),
}

#[derive(Clone)]
pub enum KillRate {
    Constant(f64),
    Custom(ScalarFn),
}

#[derive(Clone)]
pub enum OffspringLaw {
    /// Position-independent probabilities `p_0, …, p_K`.
    Constant(Vec<f64>),
    /// Piecewise constant along one axis: `laws[i]` applies on
    /// `thresholds[i-1] <= y[axis] < thresholds[i]`.
    Regions {
        axis: usize,
        thresholds: Vec<f64>,
        laws: Vec<Vec<f64>>,
    },
    Custom { k_max: usize, probs: VectorFn },
}

#[derive(Clone)]
pub enum Scatter {
    /// Children are born at the parent's position.
    Local,
    /// Offsets i.i.d. `N(0, scale² I)`.
    GaussianProduct { scale: f64 },
    Custom(ScatterFn),
}

#[derive(Clone)]
pub enum PointLaw {
    Dirac(Vec<f64>),
    Gaussian { mean: Vec<f64>, scale: f64 },
    Uniform { low: Vec<f64>, high: Vec<f64> },
    Custom(PointSampler),
}

impl PointLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            PointLaw::Dirac(p) => out.copy_from_slice(p),
            PointLaw::Gaussian { mean, scale } => {
                for (o, m) in out.iter_mut().zip(mean) {
                    let z: f64 = rng.sample(StandardNormal);
                    *o = m + scale * z;
                }
            }
            PointLaw::Uniform { low, high } => {
                for ((o, lo), hi) in out.iter_mut().zip(low).zip(high) {
                    *o = lo + (hi - lo) * rng.gen::<f64>();
                }
            }
            PointLaw::Custom(f) => {
                let mut dynrng = DynRng(rng);
                f(&mut dynrng, out)
            }
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            PointLaw::Dirac(p) => Some(p.len()),
            PointLaw::Gaussian { mean, .. } => Some(mean.len()),
            PointLaw::Uniform { low, high } if low.len() == high.len() => Some(low.len()),
            PointLaw::Uniform { .. } => None,
            PointLaw::Custom(_) => None,
        }
    }
}

/// Adapter so generic `Rng` callers can reach `dyn RngCore` closures.
struct DynRng<'a, R: ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for DynRng<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

/// Full model of the particle system. Immutable once built; share it
/// freely across worker threads.
#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    pub dim: usize,
    pub drift: Drift,
    pub volatility: Volatility,
    pub kill_rate: KillRate,
    pub kill_rate_bound: f64,
    pub offspring: OffspringLaw,
    pub rho_bound: f64,
    pub scatter: Scatter,
    pub immigration_rate: f64,
    pub immigration_law: PointLaw,
    pub fallback_law: PointLaw,
    pub lipschitz_hint: f64,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("kill_rate_bound", &self.kill_rate_bound)
            .field("rho_bound", &self.rho_bound)
            .field("immigration_rate", &self.immigration_rate)
            .field("k_max", &self.k_max())
            .finish_non_exhaustive()
    }
}

impl ModelSpec {
    pub fn builder(dim: usize) -> ModelBuilder {
        ModelBuilder::new(dim)
    }

    /// Largest offspring number with (possibly) positive probability.
    pub fn k_max(&self) -> usize {
        match &self.offspring {
            OffspringLaw::Constant(p) => p.len() - 1,
            OffspringLaw::Regions { laws, .. } => laws.iter().map(|l| l.len() - 1).max().unwrap_or(0),
            OffspringLaw::Custom { k_max, .. } => *k_max,
        }
    }

    /// Offspring probabilities at `y`, padded to `k_max + 1` entries.
    pub fn offspring_probs<'a>(&'a self, y: &[f64], buf: &'a mut Vec<f64>) -> &'a [f64] {
        match &self.offspring {
            OffspringLaw::Constant(p) => p,
            OffspringLaw::Regions { axis, thresholds, laws } => {
                let idx = thresholds.partition_point(|t| *t <= y[*axis]);
                &laws[idx]
            }
            OffspringLaw::Custom { k_max, probs } => {
                buf.clear();
                buf.resize(k_max + 1, 0.0);
                probs(y, buf);
                buf
            }
        }
    }

    /// Reproduction mean `ρ(y) = Σ k p_k(y)`.
    pub fn rho(&self, y: &[f64]) -> f64 {
        self.moment_mq(y, 1)
    }

    /// `m_q(y) = Σ k^q p_k(y)`, exact over the finite support.
    pub fn moment_mq(&self, y: &[f64], q: u32) -> f64 {
        let mut buf = Vec::new();
        self.offspring_probs(y, &mut buf)
            .iter()
            .enumerate()
            .map(|(k, p)| (k as f64).powi(q as i32) * p)
            .sum()
    }

    pub fn kill_rate_at(&self, y: &[f64]) -> f64 {
        match &self.kill_rate {
            KillRate::Constant(k) => *k,
            KillRate::Custom(f) => f(y),
        }
    }

    /// Dominating rate for the auxiliary jump diffusion: `‖κ‖∞ ‖ρ‖∞`,
    /// tightened to the exact value when both are position independent.
    pub fn aux_jump_rate_bound(&self) -> f64 {
        let kappa = match &self.kill_rate {
            KillRate::Constant(k) => k.min(self.kill_rate_bound),
            KillRate::Custom(_) => self.kill_rate_bound,
        };
        let rho = match &self.offspring {
            OffspringLaw::Constant(_) => self.rho(&vec![0.0; self.dim]).min(self.rho_bound),
            _ => self.rho_bound,
        };
        kappa * rho
    }

    /// Draws `k ~ (p_k(y))_k`.
    pub fn sample_offspring_count<R: Rng + ?Sized>(&self, y: &[f64], rng: &mut R) -> usize {
        let mut buf = Vec::new();
        let probs = self.offspring_probs(y, &mut buf);
        sample_index(probs.iter().copied(), rng)
    }

    /// Draws `k` with probability `k p_k(y) / ρ(y)`. Requires `ρ(y) > 0`.
    pub fn sample_size_biased_count<R: Rng + ?Sized>(&self, y: &[f64], rng: &mut R) -> usize {
        let mut buf = Vec::new();
        let probs = self.offspring_probs(y, &mut buf);
        sample_index(probs.iter().enumerate().map(|(k, p)| k as f64 * p), rng)
    }

    /// Appends `k·d` scatter offsets `(v_1, …, v_k)` to `out`.
    pub fn scatter<R: Rng + ?Sized>(&self, y: &[f64], k: usize, rng: &mut R, out: &mut Vec<f64>) {
        match &self.scatter {
            Scatter::Local => out.extend(std::iter::repeat_n(0.0, k * self.dim)),
            Scatter::GaussianProduct { scale } => {
                for _ in 0..k * self.dim {
                    let z: f64 = rng.sample(StandardNormal);
                    out.push(scale * z);
                }
            }
            Scatter::Custom(f) => {
                let mut dynrng = DynRng(rng);
                f(y, k, &mut dynrng, out)
            }
        }
    }

    pub fn sample_immigrant<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        self.immigration_law.sample(rng, out)
    }

    pub fn sample_fallback<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        self.fallback_law.sample(rng, out)
    }

    pub fn drift_at(&self, y: &[f64], out: &mut [f64]) {
        match &self.drift {
            Drift::Zero => out.fill(0.0),
            Drift::Constant(b) => out.copy_from_slice(b),
            Drift::OrnsteinUhlenbeck { rate, mean } => {
                for ((o, x), m) in out.iter_mut().zip(y).zip(mean) {
                    *o = -rate * (x - m);
                }
            }
            Drift::Tanh { strength, center } => {
                for ((o, x), c) in out.iter_mut().zip(y).zip(center) {
                    *o = -strength * (x - c).tanh();
                }
            }
            Drift::Custom(f) => f(y, out),
        }
    }

    /// Volatility matrix at `y`, row-major `d×d`.
    pub fn volatility_at(&self, y: &[f64], out: &mut [f64]) {
        let d = self.dim;
        match &self.volatility {
            Volatility::Custom(f) => f(y, out),
            _ => {
                out.fill(0.0);
                for i in 0..d {
                    out[i * d + i] = self.diagonal_volatility(y, i);
                }
            }
        }
    }

    fn diagonal_volatility(&self, y: &[f64], i: usize) -> f64 {
        match &self.volatility {
            Volatility::Constant(s) => *s,
            Volatility::Diagonal(s) => s[i],
            Volatility::Sine {
                base,
                amplitude,
                frequency,
            } => (base + amplitude * (frequency * y[i]).sin()).sqrt(),
            Volatility::Custom(_) => unreachable!("custom volatility is not diagonal"),
        }
    }

    /// Diffusion coefficient `a = σσᵀ` at `y` (row-major).
    pub fn diffusion_coefficient(&self, y: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut s = vec![0.0; d * d];
        self.volatility_at(y, &mut s);
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                a[i * d + j] = (0..d).map(|k| s[i * d + k] * s[j * d + k]).sum();
            }
        }
        a
    }

    /// One Euler–Maruyama step of length `h` applied in place.
    pub fn euler_step<R: Rng + ?Sized>(&self, x: &mut [f64], h: f64, rng: &mut R, scratch: &mut Scratch) {
        let d = self.dim;
        let sqrt_h = h.sqrt();
        scratch.drift.resize(d, 0.0);
        self.drift_at(x, &mut scratch.drift);
        match &self.volatility {
            Volatility::Custom(f) => {
                scratch.vol.resize(d * d, 0.0);
                scratch.noise.resize(d, 0.0);
                f(x, &mut scratch.vol);
                for z in scratch.noise.iter_mut() {
                    *z = rng.sample(StandardNormal);
                }
                for i in 0..d {
                    let row = &scratch.vol[i * d..(i + 1) * d];
                    let dw: f64 = row.iter().zip(&scratch.noise).map(|(s, z)| s * z).sum();
                    x[i] += scratch.drift[i] * h + sqrt_h * dw;
                }
            }
            _ => {
                for i in 0..d {
                    let s = self.diagonal_volatility(x, i);
                    let z: f64 = rng.sample(StandardNormal);
                    x[i] += scratch.drift[i] * h + s * sqrt_h * z;
                }
            }
        }
    }
}

/// Reusable buffers for [`ModelSpec::euler_step`].
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    drift: Vec<f64>,
    vol: Vec<f64>,
    noise: Vec<f64>,
}

/// Inverse-CDF draw from unnormalised nonnegative weights.
fn sample_index<R: Rng + ?Sized>(weights: impl Iterator<Item = f64> + Clone, rng: &mut R) -> usize {
    let total: f64 = weights.clone().sum();
    let mut u = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
            if u < w {
                return i;
            }
            u -= w;
        }
    }
    last
}

pub struct ModelBuilder {
    name: String,
    dim: usize,
    drift: Drift,
    volatility: Volatility,
    kill_rate: KillRate,
    kill_rate_bound: Option<f64>,
    offspring: OffspringLaw,
    rho_bound: Option<f64>,
    scatter: Scatter,
    immigration_rate: f64,
    immigration_law: Option<PointLaw>,
    fallback_law: Option<PointLaw>,
    lipschitz_hint: f64,
}

impl ModelBuilder {
    fn new(dim: usize) -> Self {
        Self {
            name: "custom".into(),
            dim,
            drift: Drift::Zero,
            volatility: Volatility::Constant(1.0),
            kill_rate: KillRate::Constant(1.0),
            kill_rate_bound: None,
            offspring: OffspringLaw::Constant(vec![1.0]),
            rho_bound: None,
            scatter: Scatter::Local,
            immigration_rate: 1.0,
            immigration_law: None,
            fallback_law: None,
            lipschitz_hint: 1.0,
        }
    }

    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
    pub fn drift(mut self, drift: Drift) -> Self {
        self.drift = drift;
        self
    }
    pub fn volatility(mut self, volatility: Volatility) -> Self {
        self.volatility = volatility;
        self
    }
    pub fn kill_rate(mut self, kill_rate: KillRate) -> Self {
        self.kill_rate = kill_rate;
        self
    }
    pub fn kill_rate_bound(mut self, bound: f64) -> Self {
        self.kill_rate_bound = Some(bound);
        self
    }
    pub fn offspring(mut self, law: OffspringLaw) -> Self {
        self.offspring = law;
        self
    }
    pub fn rho_bound(mut self, bound: f64) -> Self {
        self.rho_bound = Some(bound);
        self
    }
    pub fn scatter(mut self, scatter: Scatter) -> Self {
        self.scatter = scatter;
        self
    }
    pub fn immigration(mut self, rate: f64, law: PointLaw) -> Self {
        self.immigration_rate = rate;
        self.immigration_law = Some(law);
        self
    }
    pub fn fallback_law(mut self, law: PointLaw) -> Self {
        self.fallback_law = Some(law);
        self
    }
    pub fn lipschitz_hint(mut self, l: f64) -> Self {
        self.lipschitz_hint = l;
        self
    }

    pub fn build(self) -> Result<ModelSpec> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        let check_len = |name: &str, len: usize| {
            if len == d {
                Ok(())
            } else {
                Err(Error::param(name, format!("expected {d} components, got {len}")))
            }
        };
        match &self.drift {
            Drift::Constant(b) => check_len("drift", b.len())?,
            Drift::OrnsteinUhlenbeck { mean, .. } => check_len("drift.mean", mean.len())?,
            Drift::Tanh { center, .. } => check_len("drift.center", center.len())?,
            _ => {}
        }
        match &self.volatility {
            Volatility::Constant(s) if !s.is_finite() => {
                return Err(Error::param("volatility", "must be finite"))
            }
            Volatility::Diagonal(s) => check_len("volatility", s.len())?,
            Volatility::Sine { base, amplitude, .. } if base - amplitude.abs() <= 0.0 => {
                return Err(Error::param("volatility", "base must exceed |amplitude|"))
            }
            _ => {}
        }
        let offspring_laws: Vec<&Vec<f64>> = match &self.offspring {
            OffspringLaw::Constant(p) => vec![p],
            OffspringLaw::Regions { axis, thresholds, laws } => {
                if *axis >= d {
                    return Err(Error::param("offspring.axis", "axis out of range"));
                }
                if laws.len() != thresholds.len() + 1 {
                    return Err(Error::param("offspring", "need one law per region"));
                }
                if thresholds.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::param("offspring.thresholds", "must increase"));
                }
                laws.iter().collect()
            }
            OffspringLaw::Custom { .. } => vec![],
        };
        for p in &offspring_laws {
            check_probability_vector(p)?;
        }
        let kill_rate_bound = match (&self.kill_rate, self.kill_rate_bound) {
            (_, Some(b)) => b,
            (KillRate::Constant(k), None) => *k,
            (KillRate::Custom(_), None) => {
                return Err(Error::param("kill_rate_bound", "required for a custom kill rate"))
            }
        };
        if !(kill_rate_bound > 0.0 && kill_rate_bound.is_finite()) {
            return Err(Error::param("kill_rate_bound", "must be positive and finite"));
        }
        if let KillRate::Constant(k) = self.kill_rate {
            if !(k > 0.0) || k > kill_rate_bound {
                return Err(Error::param("kill_rate", "must lie in (0, kill_rate_bound]"));
            }
        }
        let rho_bound = match self.rho_bound {
            Some(b) => b,
            None if !offspring_laws.is_empty() => offspring_laws
                .iter()
                .map(|p| p.iter().enumerate().map(|(k, q)| k as f64 * q).sum::<f64>())
                .fold(0.0, f64::max)
                .max(f64::MIN_POSITIVE),
            None => return Err(Error::param("rho_bound", "required for a custom offspring law")),
        };
        if !(rho_bound > 0.0 && rho_bound.is_finite()) {
            return Err(Error::param("rho_bound", "must be positive and finite"));
        }
        if !(self.immigration_rate >= 0.0 && self.immigration_rate.is_finite()) {
            return Err(Error::param("immigration_rate", "must be nonnegative and finite"));
        }
        if let Scatter::GaussianProduct { scale } = self.scatter {
            if !(scale >= 0.0) {
                return Err(Error::param("scatter.scale", "must be nonnegative"));
            }
        }
        let immigration_law = self.immigration_law.unwrap_or_else(|| PointLaw::Dirac(vec![0.0; d]));
        let fallback_law = self.fallback_law.unwrap_or_else(|| immigration_law.clone());
        for (name, law) in [("immigration_law", &immigration_law), ("fallback_law", &fallback_law)] {
            if let Some(n) = law.dim() {
                check_len(name, n)?;
            }
            if let PointLaw::Uniform { low, high } = law {
                if low.len() != high.len() || low.iter().zip(high).any(|(l, h)| l > h) {
                    return Err(Error::param(name, "uniform box needs low <= high"));
                }
            }
        }
        if !(self.lipschitz_hint > 0.0) {
            return Err(Error::param("lipschitz_hint", "must be positive"));
        }
        Ok(ModelSpec {
            name: self.name,
            dim: d,
            drift: self.drift,
            volatility: self.volatility,
            kill_rate: self.kill_rate,
            kill_rate_bound,
            offspring: self.offspring,
            rho_bound,
            scatter: self.scatter,
            immigration_rate: self.immigration_rate,
            immigration_law,
            fallback_law,
            lipschitz_hint: self.lipschitz_hint,
        })
    }
}

fn check_probability_vector(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::param("offspring", "empty probability vector"));
    }
    if p.iter().any(|q| !(0.0..=1.0).contains(q)) {
        return Err(Error::param("offspring", "probabilities must lie in [0, 1]"));
    }
    Ok(())
}
