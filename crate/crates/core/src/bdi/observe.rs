use serde::{Deserialize, Serialize};

use super::engine::{Sink, Trajectory};
use super::{Configuration, EventLogEntry, Observation, Particles};
use crate::error::{Error, Result};
use crate::reconstruct::is_wellspread;

/// Ground truth for the path segment `[iΔ, (i+1)Δ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub interval_index: u64,
    /// A jump happened in `(iΔ, (i+1)Δ]`.
    pub had_event: bool,
    pub start: Configuration,
    pub end: Configuration,
    /// `(id, end - start)` for every particle; empty when `had_event`.
    pub increments: Vec<(u64, Vec<f64>)>,
}

impl SegmentRecord {
    fn new(interval_index: u64, had_event: bool, start: Configuration, end: Configuration) -> Self {
        let increments = if had_event {
            Vec::new()
        } else {
            start
                .ids()
                .iter()
                .enumerate()
                .map(|(i, &id)| {
                    let to = end.position_of(id).expect("event-free segment keeps its particles");
                    let inc = start.particle(i).iter().zip(to).map(|(a, b)| b - a).collect();
                    (id, inc)
                })
                .collect()
        };
        Self {
            interval_index,
            had_event,
            start,
            end,
            increments,
        }
    }

    /// The segment is continuous, starts nonvoid and `4Δ^λ`-wellspread, and
    /// every particle moves less than `Δ^λ` in each coordinate.
    pub fn ci_flag(&self, delta: f64, lambda: f64) -> bool {
        let r = delta.powf(lambda);
        !self.had_event
            && !self.start.is_empty()
            && is_wellspread(&self.start, 4.0 * r)
            && self.increments.iter().all(|(_, v)| v.iter().all(|c| c.abs() < r))
    }
}

fn stride_for(delta: f64, dt: f64) -> Result<u64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param("delta", "must be positive and finite"));
    }
    let k = (delta / dt).round();
    if k < 1.0 || (k * dt - delta).abs() > 1e-9 * delta {
        return Err(Error::IncommensurateGrid { delta, dt });
    }
    Ok(k as u64)
}

/// Sink that observes the process every `Δ = stride·dt` and hands each
/// consecutive pair `(η_{iΔ}, η_{(i+1)Δ})` with its truth record to
/// `on_pair`. Returning `false` from `on_pair` stops the run.
pub struct ObservationRecorder<F> {
    stride: u64,
    last: Option<(Configuration, Observation)>,
    had_event: bool,
    index: u64,
    done: bool,
    on_pair: F,
}

impl<F> ObservationRecorder<F>
where
    F: FnMut(&Observation, &Observation, &SegmentRecord) -> bool,
{
    pub fn new(delta: f64, dt: f64, on_pair: F) -> Result<Self> {
        Ok(Self {
            stride: stride_for(delta, dt)?,
            last: None,
            had_event: false,
            index: 0,
            done: false,
            on_pair,
        })
    }

    pub fn pairs_seen(&self) -> u64 {
        self.index
    }

    fn observe_at(&mut self, config: &Configuration) {
        let obs = config.observe();
        if let Some((start, x)) = self.last.take() {
            let record = SegmentRecord::new(self.index, self.had_event, start, config.clone());
            self.index += 1;
            if !(self.on_pair)(&x, &obs, &record) {
                self.done = true;
            }
        }
        self.last = Some((config.clone(), obs));
        self.had_event = false;
    }
}

impl<F> Sink for ObservationRecorder<F>
where
    F: FnMut(&Observation, &Observation, &SegmentRecord) -> bool,
{
    fn grid(&mut self, k: u64, _t: f64, config: &Configuration) {
        if k.is_multiple_of(self.stride) && !self.done {
            self.observe_at(config);
        }
    }

    fn event(&mut self, _event: &EventLogEntry, _after: &Configuration) {
        self.had_event = true;
    }

    fn finished(&self) -> bool {
        self.done
    }
}

/// Observations `η_0, η_Δ, …, η_{NΔ}` (ids stripped, canonical order) and
/// the truth record of each of the `N` segments.
pub fn observe(trajectory: &Trajectory, delta: f64) -> Result<(Vec<Observation>, Vec<SegmentRecord>)> {
    let stride = stride_for(delta, trajectory.dt)?;
    let mut observations = Vec::new();
    let mut truth = Vec::new();
    let mut last: Option<&Configuration> = None;
    let mut had_event = false;
    for p in &trajectory.points {
        match p.grid_index {
            None => had_event = true,
            Some(k) if k % stride == 0 => {
                // a final partial step does not land on the Δ-lattice
                if (p.time - (k / stride) as f64 * delta).abs() > 1e-9 * delta.max(p.time) {
                    break;
                }
                if let Some(start) = last {
                    truth.push(SegmentRecord::new(truth.len() as u64, had_event, start.clone(), p.config.clone()));
                }
                observations.push(p.config.observe());
                last = Some(&p.config);
                had_event = false;
            }
            Some(_) => {}
        }
    }
    Ok((observations, truth))
}
