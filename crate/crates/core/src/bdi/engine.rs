use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::{Configuration, EventKind, EventLogEntry, Particles};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, Scratch};
use crate::sde::{grid_steps, grid_time};

/// Receives the simulated dynamics.
///
/// Between jumps the engine advances in Euler sub-steps; each sub-step
/// `[t0, t1)` is reported through [`Sink::interval`] with the configuration
/// at `t0`. Grid points `k·dt` are reported after the step that reaches
/// them, and every jump after it has been applied.
pub trait Sink {
    fn interval(&mut self, _t0: f64, _t1: f64, _config: &Configuration) {}
    fn grid(&mut self, _k: u64, _t: f64, _config: &Configuration) {}
    fn event(&mut self, _event: &EventLogEntry, _after: &Configuration) {}
    /// Checked after every grid point; `true` ends the run early.
    fn finished(&self) -> bool {
        false
    }
}

impl Sink for () {}

impl<S: Sink + ?Sized> Sink for &mut S {
    fn interval(&mut self, t0: f64, t1: f64, config: &Configuration) {
        (**self).interval(t0, t1, config)
    }
    fn grid(&mut self, k: u64, t: f64, config: &Configuration) {
        (**self).grid(k, t, config)
    }
    fn event(&mut self, event: &EventLogEntry, after: &Configuration) {
        (**self).event(event, after)
    }
    fn finished(&self) -> bool {
        (**self).finished()
    }
}

impl<A: Sink, B: Sink> Sink for (A, B) {
    fn interval(&mut self, t0: f64, t1: f64, config: &Configuration) {
        self.0.interval(t0, t1, config);
        self.1.interval(t0, t1, config);
    }
    fn grid(&mut self, k: u64, t: f64, config: &Configuration) {
        self.0.grid(k, t, config);
        self.1.grid(k, t, config);
    }
    fn event(&mut self, event: &EventLogEntry, after: &Configuration) {
        self.0.event(event, after);
        self.1.event(event, after);
    }
    fn finished(&self) -> bool {
        self.0.finished() || self.1.finished()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub dt: f64,
    pub max_population: usize,
    /// Cap on jump events per run.
    pub max_events: u64,
}

impl SimOptions {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            max_population: 100_000,
            max_events: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    Horizon(f64),
    /// Stop at the first jump that empties the configuration; give up at
    /// `time_cap`.
    ReturnToVoid { time_cap: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    Horizon,
    ReturnedToVoid,
    TimeCap,
    SinkFinished,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSummary {
    pub end_time: f64,
    pub n_events: u64,
    pub reason: StopReason,
}

/// Runs the particle system from `init` until `stop`, streaming into `sink`.
///
/// Jumps are proposed by a homogeneous clock of rate `c + ‖κ‖∞ ℓ` and
/// accepted with probability `(c + Σ_j κ(x_j)) / (c + ‖κ‖∞ ℓ)`. An accepted
/// jump is an immigration with probability `c / (c + Σκ)`; otherwise
/// particle `j` (chosen proportionally to `κ(x_j)`) is replaced by `k`
/// children at `x_j + v_1, …, x_j + v_k`.
pub fn run<R: Rng + ?Sized, S: Sink>(
    spec: &ModelSpec,
    init: Configuration,
    stop: StopRule,
    opts: &SimOptions,
    rng: &mut R,
    mut sink: S,
) -> Result<RunSummary> {
    if init.dim() != spec.dim {
        return Err(Error::LengthMismatch {
            left: init.dim(),
            right: spec.dim,
        });
    }
    let horizon = match stop {
        StopRule::Horizon(h) => h,
        StopRule::ReturnToVoid { time_cap } => time_cap,
    };
    let dt = opts.dt;
    let n_steps = grid_steps(horizon, dt)?;
    let d = spec.dim;
    let c = spec.immigration_rate;
    let kbar = spec.kill_rate_bound;

    let mut cfg = init;
    let mut next_id = cfg.max_id().map_or(0, |m| m + 1);
    let mut scratch = Scratch::default();
    let mut offsets = Vec::new();
    let mut children = Vec::new();
    let mut kappas: Vec<f64> = Vec::new();
    let mut t = 0.0;
    let mut n_events = 0u64;
    // absolute time of the pending thinning proposal
    let mut pending: Option<f64> = None;

    sink.grid(0, 0.0, &cfg);
    for k in 0..n_steps {
        let t_end = grid_time(k + 1, dt, horizon);
        loop {
            let ell = cfg.len();
            let bound = c + kbar * ell as f64;
            let proposal = *pending.get_or_insert_with(|| {
                if bound > 0.0 {
                    let e: f64 = Exp1.sample(rng);
                    t + e / bound
                } else {
                    f64::INFINITY
                }
            });
            let target = proposal.min(t_end);
            let h = target - t;
            if h > 0.0 {
                sink.interval(t, target, &cfg);
                for x in cfg.positions_mut().chunks_mut(d) {
                    spec.euler_step(x, h, rng, &mut scratch);
                    if x.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NumericalFailure { step: k, time: target });
                    }
                }
            }
            t = target;
            if proposal >= t_end {
                break;
            }
            pending = None;

            kappas.clear();
            kappas.extend((0..ell).map(|j| spec.kill_rate_at(cfg.particle(j))));
            let total: f64 = c + kappas.iter().sum::<f64>();
            let u = rng.gen::<f64>() * bound;
            if u >= total {
                continue;
            }
            let event = if u < c {
                let mut y = vec![0.0; d];
                spec.sample_immigrant(rng, &mut y);
                cfg.push(&y, next_id);
                next_id += 1;
                EventLogEntry {
                    time: t,
                    kind: EventKind::Immigration,
                    parent_id: None,
                    immigrant_id: Some(next_id - 1),
                    child_ids: Vec::new(),
                    child_offsets: Vec::new(),
                }
            } else {
                let mut rest = u - c;
                let mut j = ell - 1;
                for (i, kap) in kappas.iter().enumerate() {
                    if rest < *kap {
                        j = i;
                        break;
                    }
                    rest -= kap;
                }
                let parent: Vec<f64> = cfg.particle(j).to_vec();
                let parent_id = cfg.ids()[j];
                let n_children = spec.sample_offspring_count(&parent, rng);
                offsets.clear();
                spec.scatter(&parent, n_children, rng, &mut offsets);
                children.clear();
                children.extend(offsets.iter().enumerate().map(|(i, v)| parent[i % d] + v));
                let child_ids: Vec<u64> = (next_id..next_id + n_children as u64).collect();
                next_id += n_children as u64;
                cfg.replace(j, &children, &child_ids);
                EventLogEntry {
                    time: t,
                    kind: if n_children == 0 {
                        EventKind::Death
                    } else {
                        EventKind::Branch(n_children)
                    },
                    parent_id: Some(parent_id),
                    immigrant_id: None,
                    child_ids,
                    child_offsets: offsets.clone(),
                }
            };
            n_events += 1;
            sink.event(&event, &cfg);
            if n_events > opts.max_events {
                return Err(Error::Explosion {
                    what: "events",
                    value: n_events,
                    cap: opts.max_events,
                });
            }
            if cfg.len() > opts.max_population {
                return Err(Error::Explosion {
                    what: "population",
                    value: cfg.len() as u64,
                    cap: opts.max_population as u64,
                });
            }
            if matches!(stop, StopRule::ReturnToVoid { .. }) && cfg.is_empty() {
                return Ok(RunSummary {
                    end_time: t,
                    n_events,
                    reason: StopReason::ReturnedToVoid,
                });
            }
        }
        t = t_end;
        sink.grid(k + 1, t, &cfg);
        if sink.finished() {
            return Ok(RunSummary {
                end_time: t,
                n_events,
                reason: StopReason::SinkFinished,
            });
        }
    }
    Ok(RunSummary {
        end_time: t,
        n_events,
        reason: match stop {
            StopRule::Horizon(_) => StopReason::Horizon,
            StopRule::ReturnToVoid { .. } => StopReason::TimeCap,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub time: f64,
    /// `Some(k)` for the grid point `k·dt`, `None` right after a jump.
    pub grid_index: Option<u64>,
    pub config: Configuration,
}

/// Configurations at every grid point and every jump, plus the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dim: usize,
    pub dt: f64,
    pub points: Vec<TrajectoryPoint>,
    pub events: Vec<EventLogEntry>,
}

impl Trajectory {
    pub fn end_time(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.time)
    }

    pub fn grid_points(&self) -> impl Iterator<Item = (u64, &TrajectoryPoint)> {
        self.points.iter().filter_map(|p| p.grid_index.map(|k| (k, p)))
    }
}

/// Sink that keeps the full trajectory in memory.
#[derive(Debug, Clone)]
pub struct TrajectoryRecorder {
    pub trajectory: Trajectory,
}

impl TrajectoryRecorder {
    pub fn new(dim: usize, dt: f64) -> Self {
        Self {
            trajectory: Trajectory {
                dim,
                dt,
                points: Vec::new(),
                events: Vec::new(),
            },
        }
    }
}

impl Sink for TrajectoryRecorder {
    fn grid(&mut self, k: u64, t: f64, config: &Configuration) {
        self.trajectory.points.push(TrajectoryPoint {
            time: t,
            grid_index: Some(k),
            config: config.clone(),
        });
    }

    fn event(&mut self, event: &EventLogEntry, after: &Configuration) {
        self.trajectory.points.push(TrajectoryPoint {
            time: event.time,
            grid_index: None,
            config: after.clone(),
        });
        self.trajectory.events.push(event.clone());
    }
}

/// Simulates on `[0, horizon]` and records the trajectory.
pub fn simulate<R: Rng + ?Sized>(
    spec: &ModelSpec,
    init: Configuration,
    horizon: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    simulate_with(spec, init, horizon, &SimOptions::new(dt), rng)
}

pub fn simulate_with<R: Rng + ?Sized>(
    spec: &ModelSpec,
    init: Configuration,
    horizon: f64,
    opts: &SimOptions,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut rec = TrajectoryRecorder::new(spec.dim, opts.dt);
    run(spec, init, StopRule::Horizon(horizon), opts, rng, &mut rec)?;
    Ok(rec.trajectory)
}

/// The branching diffusion without immigration started from `ancestors`.
pub fn simulate_branching_only<R: Rng + ?Sized>(
    spec: &ModelSpec,
    ancestors: Configuration,
    horizon: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut no_immigration = spec.clone();
    no_immigration.immigration_rate = 0.0;
    simulate(&no_immigration, ancestors, horizon, dt, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_preset, KillRate, OffspringLaw, Volatility};
    use crate::stats::mean_se;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    #[test]
    fn no_immigration_from_void_stays_void() {
        let mut spec = builtin_preset("pure-death-bm").unwrap();
        spec.immigration_rate = 0.0;
        let traj = simulate(&spec, Configuration::void(1), 5.0, 0.1, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(traj.events.is_empty());
        assert_eq!(traj.points.len(), 51);
        assert!(traj.points.iter().all(|p| p.config.is_empty()));
    }

    #[test]
    fn frozen_pure_death_extinction_time_is_exponential() {
        let spec = ModelSpec::builder(1).volatility(Volatility::Constant(0.0)).build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let times: Vec<f64> = (0..10_000)
            .map(|_| {
                let traj = simulate_branching_only(&spec, Configuration::from_positions(1, vec![0.0]), 30.0, 1.0, &mut rng)
                    .unwrap();
                traj.events.first().map_or(30.0, |e| e.time)
            })
            .collect();
        let est = mean_se(&times);
        assert!(est.within(1.0, 3.0), "{est:?}");
    }

    #[test]
    fn mm_infinity_time_average_population() {
        let spec = builtin_preset("mm-inf").unwrap();
        struct Area(f64);
        impl Sink for Area {
            fn interval(&mut self, t0: f64, t1: f64, c: &Configuration) {
                self.0 += (t1 - t0) * c.len() as f64;
            }
        }
        // batch means over independent runs
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let avgs: Vec<f64> = (0..100)
            .map(|_| {
                let mut area = Area(0.0);
                run(&spec, Configuration::void(1), StopRule::Horizon(200.0), &SimOptions::new(0.5), &mut rng, &mut area)
                    .unwrap();
                area.0 / 200.0
            })
            .collect();
        let est = mean_se(&avgs);
        // start at δ: the mean deficit is ∫_0^T 2e^{-t} dt / T = 0.01
        assert!(est.within(2.0 - 0.01, 3.0), "{est:?}");
    }

    #[test]
    fn single_never_branching_particle_persists() {
        let spec = ModelSpec::builder(1).offspring(OffspringLaw::Constant(vec![0.0, 1.0])).build().unwrap();
        let traj =
            simulate_branching_only(&spec, Configuration::from_positions(1, vec![0.0]), 10.0, 0.05, &mut ChaCha8Rng::seed_from_u64(4))
                .unwrap();
        assert!(!traj.events.is_empty());
        assert!(traj.points.iter().all(|p| p.config.len() == 1));
        let first = traj.points.first().unwrap().config.particle(0)[0];
        let last = traj.points.last().unwrap().config.particle(0)[0];
        assert_ne!(first, last);
    }

    #[test]
    fn pure_death_goes_extinct() {
        let spec = builtin_preset("pure-death-bm").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20_000;
        let extinct = (0..n)
            .filter(|_| {
                let traj =
                    simulate_branching_only(&spec, Configuration::from_positions(1, vec![0.0]), 10.0, 1.0, &mut rng)
                        .unwrap();
                traj.points.last().unwrap().config.is_empty()
            })
            .count();
        assert!(extinct as f64 / n as f64 >= 0.9999);
    }

    #[test]
    fn lineage_and_population_balance() {
        let spec = builtin_preset("binary-spread").unwrap();
        let traj = simulate(&spec, Configuration::void(1), 50.0, 0.01, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        assert!(traj.events.len() > 50);
        let mut alive: HashSet<u64> = HashSet::new();
        let mut dead: HashSet<u64> = HashSet::new();
        let mut last_time = 0.0;
        let jump_points = traj.points.iter().filter(|p| p.grid_index.is_none());
        let mut prev_len = 0i64;
        let mut ev_iter = traj.events.iter();
        for p in &traj.points {
            if p.grid_index.is_some() {
                let ids: HashSet<u64> = p.config.ids().iter().copied().collect();
                assert_eq!(ids, alive);
                prev_len = p.config.len() as i64;
                continue;
            }
            let ev = ev_iter.next().unwrap();
            assert!(ev.time > last_time);
            last_time = ev.time;
            assert_eq!(p.config.len() as i64 - prev_len, ev.population_change());
            prev_len = p.config.len() as i64;
            match ev.kind {
                EventKind::Immigration => {
                    let id = ev.immigrant_id.unwrap();
                    assert!(!dead.contains(&id) && alive.insert(id));
                }
                EventKind::Death | EventKind::Branch(_) => {
                    let parent = ev.parent_id.unwrap();
                    assert!(alive.remove(&parent));
                    dead.insert(parent);
                    let k = match ev.kind {
                        EventKind::Branch(k) => k,
                        _ => 0,
                    };
                    assert_eq!(ev.child_ids.len(), k);
                    assert_eq!(ev.child_offsets.len(), k);
                    for c in &ev.child_ids {
                        assert!(!dead.contains(c) && alive.insert(*c));
                    }
                }
            }
        }
        assert_eq!(jump_points.count(), traj.events.len());
    }

    #[test]
    fn explosion_guard_trips() {
        let spec = ModelSpec::builder(1)
            .offspring(OffspringLaw::Constant(vec![0.0, 0.0, 1.0]))
            .kill_rate(KillRate::Constant(5.0))
            .build()
            .unwrap();
        let mut opts = SimOptions::new(0.1);
        opts.max_population = 50;
        let err = run(
            &spec,
            Configuration::from_positions(1, vec![0.0]),
            StopRule::Horizon(100.0),
            &opts,
            &mut ChaCha8Rng::seed_from_u64(7),
            (),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Explosion { what: "population", .. }));
    }

    #[test]
    fn same_seed_same_trajectory() {
        let spec = builtin_preset("binary-spread").unwrap();
        let a = simulate(&spec, Configuration::void(1), 10.0, 0.01, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let b = simulate(&spec, Configuration::void(1), 10.0, 0.01, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_eq!(a, b);
    }
}
