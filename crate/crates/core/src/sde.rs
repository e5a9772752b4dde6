//! Single-particle numerics: Euler–Maruyama paths of the one-particle
//! motion, killing by Poisson thinning, the auxiliary jump diffusion that
//! relocates according to the size-biased offspring kernel, and the
//! Feynman–Kac weight used in many-to-one checks.
//!
//! All samplers walk the grid `0, dt, 2dt, …, horizon` (the last step may
//! be shorter). A pending thinning proposal that falls inside a step
//! splits it, so proposals are evaluated at the particle's position at the
//! proposal time.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ModelSpec, Scratch};
use crate::stats::{mean_se, Estimate};

/// Discretised path of one particle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    pub dim: usize,
    pub times: Vec<f64>,
    /// Flattened positions, `dim` entries per time.
    pub positions: Vec<f64>,
    pub step: f64,
}

impl PathSample {
    fn new(dim: usize, y0: &[f64], step: f64) -> Self {
        Self {
            dim,
            times: vec![0.0],
            positions: y0.to_vec(),
            step,
        }
    }

    fn push(&mut self, t: f64, x: &[f64]) {
        self.times.push(t);
        self.positions.extend_from_slice(x);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn endpoint(&self) -> &[f64] {
        self.position(self.len() - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KillStatus {
    Survived,
    Killed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KilledOutcome {
    pub status: KillStatus,
    pub terminal_time: f64,
    pub terminal_position: Vec<f64>,
}

/// Number of grid steps covering `[0, horizon]` with spacing `dt`.
pub(crate) fn grid_steps(horizon: f64, dt: f64) -> Result<u64> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", "must be positive and finite"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param("horizon", "must be positive and finite"));
    }
    if dt > horizon * (1.0 + 1e-12) {
        return Err(Error::param("dt", "must not exceed the horizon"));
    }
    Ok((horizon / dt - 1e-9).ceil().max(1.0) as u64)
}

/// Grid time of step index `k`, clamped to the horizon.
#[inline]
pub(crate) fn grid_time(k: u64, dt: f64, horizon: f64) -> f64 {
    (k as f64 * dt).min(horizon)
}

enum Proposal {
    Rejected,
    Jumped,
    Stop,
}

/// Shared single-particle driver. `on_proposal` is called at each thinning
/// proposal with the current position; `on_piece(h, before, after)` sees
/// every continuous Euler sub-step.
#[allow(clippy::too_many_arguments)]
fn drive<R: Rng + ?Sized>(
    spec: &ModelSpec,
    y0: &[f64],
    horizon: f64,
    dt: f64,
    proposal_rate: f64,
    rng: &mut R,
    mut on_proposal: impl FnMut(f64, &mut Vec<f64>, &mut R) -> Proposal,
    mut on_piece: impl FnMut(f64, &[f64], &[f64]),
) -> Result<(PathSample, Option<f64>)> {
    if y0.len() != spec.dim {
        return Err(Error::LengthMismatch {
            left: y0.len(),
            right: spec.dim,
        });
    }
    let n = grid_steps(horizon, dt)?;
    let clock = (proposal_rate > 0.0).then(|| Exp::new(proposal_rate).expect("positive rate"));
    let mut path = PathSample::new(spec.dim, y0, dt);
    let mut x = y0.to_vec();
    let mut before = x.clone();
    let mut scratch = Scratch::default();
    let mut t = 0.0;
    let mut next_proposal = clock.as_ref().map_or(f64::INFINITY, |c| c.sample(rng));
    for k in 0..n {
        let t_end = grid_time(k + 1, dt, horizon);
        loop {
            let target = next_proposal.min(t_end);
            let h = target - t;
            if h > 0.0 {
                before.copy_from_slice(&x);
                spec.euler_step(&mut x, h, rng, &mut scratch);
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NumericalFailure { step: k, time: target });
                }
                on_piece(h, &before, &x);
            }
            t = target;
            if next_proposal >= t_end {
                break;
            }
            match on_proposal(t, &mut x, rng) {
                Proposal::Stop => {
                    path.push(t, &x);
                    return Ok((path, Some(t)));
                }
                Proposal::Jumped => path.push(t, &x),
                Proposal::Rejected => {}
            }
            next_proposal = t + clock.as_ref().map_or(f64::INFINITY, |c| c.sample(rng));
        }
        t = t_end;
        path.push(t_end, &x);
    }
    Ok((path, None))
}

/// Euler–Maruyama path of `dξ = b(ξ)dt + σ(ξ)dW` started at `y0`.
pub fn integrate_diffusion<R: Rng + ?Sized>(
    spec: &ModelSpec,
    y0: &[f64],
    horizon: f64,
    dt: f64,
    rng: &mut R,
) -> Result<PathSample> {
    let (path, _) = drive(spec, y0, horizon, dt, 0.0, rng, |_, _, _| Proposal::Rejected, |_, _, _| {})?;
    Ok(path)
}

/// Diffusion killed at rate `κ`, simulated by thinning proposals of rate
/// `‖κ‖∞`. The returned path ends at the kill time when killed.
pub fn sample_killed_motion<R: Rng + ?Sized>(
    spec: &ModelSpec,
    y0: &[f64],
    horizon: f64,
    dt: f64,
    rng: &mut R,
) -> Result<(PathSample, KilledOutcome)> {
    let bound = spec.kill_rate_bound;
    let (path, killed) = drive(
        spec,
        y0,
        horizon,
        dt,
        bound,
        rng,
        |_, x, rng| {
            if rng.gen::<f64>() * bound < spec.kill_rate_at(x) {
                Proposal::Stop
            } else {
                Proposal::Rejected
            }
        },
        |_, _, _| {},
    )?;
    let outcome = KilledOutcome {
        status: if killed.is_some() {
            KillStatus::Killed
        } else {
            KillStatus::Survived
        },
        terminal_time: killed.unwrap_or(horizon),
        terminal_position: path.endpoint().to_vec(),
    };
    Ok((path, outcome))
}

/// Performs one jump of the auxiliary process from `x`: size-biased
/// offspring number, scatter, uniformly chosen child.
fn relocate<R: Rng + ?Sized>(spec: &ModelSpec, x: &mut [f64], rng: &mut R, offsets: &mut Vec<f64>) {
    let d = spec.dim;
    let k = spec.sample_size_biased_count(x, rng);
    offsets.clear();
    spec.scatter(x, k, rng, offsets);
    let j = rng.gen_range(0..k);
    for (xi, v) in x.iter_mut().zip(&offsets[j * d..(j + 1) * d]) {
        *xi += v;
    }
}

fn aux_driver<R: Rng + ?Sized>(
    spec: &ModelSpec,
    y0: &[f64],
    horizon: f64,
    dt: f64,
    rng: &mut R,
    on_piece: impl FnMut(f64, &[f64], &[f64]),
) -> Result<PathSample> {
    let bound = spec.aux_jump_rate_bound();
    let mut offsets = Vec::new();
    let (path, _) = drive(
        spec,
        y0,
        horizon,
        dt,
        bound,
        rng,
        |_, x, rng| {
            let rate = spec.kill_rate_at(x) * spec.rho(x);
            if rng.gen::<f64>() * bound < rate {
                relocate(spec, x, rng, &mut offsets);
                Proposal::Jumped
            } else {
                Proposal::Rejected
            }
        },
        on_piece,
    )?;
    Ok(path)
}

/// Auxiliary jump diffusion: moves like the one-particle motion and jumps
/// at rate `κ(y)ρ(y)` to `y + v_j`, where the offspring number is drawn
/// size-biased, `v` from the scatter kernel and `j` uniformly. Jump times
/// appear in the path with the post-jump position.
pub fn sample_aux_jump_diffusion<R: Rng + ?Sized>(
    spec: &ModelSpec,
    y0: &[f64],
    horizon: f64,
    dt: f64,
    rng: &mut R,
) -> Result<PathSample> {
    aux_driver(spec, y0, horizon, dt, rng, |_, _, _| {})
}

/// Monte Carlo estimate of `E_y[exp(-∫_0^t κ(1-ρ)(ξ̃_s) ds)]`, the expected
/// number of descendants alive at `t` of one particle started at `y0`.
/// The exponent is accumulated by the trapezoidal rule on each continuous
/// Euler sub-step.
pub fn feynman_kac_survival<R: Rng + ?Sized>(
    spec: &ModelSpec,
    y0: &[f64],
    t: f64,
    dt: f64,
    n_paths: usize,
    rng: &mut R,
) -> Result<Estimate> {
    if n_paths < 2 {
        return Err(Error::param("n_paths", "need at least two paths"));
    }
    let potential = |x: &[f64]| spec.kill_rate_at(x) * (1.0 - spec.rho(x));
    let mut weights = Vec::with_capacity(n_paths);
    for _ in 0..n_paths {
        let mut exponent = 0.0;
        aux_driver(spec, y0, t, dt, rng, |h, a, b| {
            exponent += 0.5 * h * (potential(a) + potential(b));
        })?;
        weights.push((-exponent).exp());
    }
    Ok(mean_se(&weights))
}
