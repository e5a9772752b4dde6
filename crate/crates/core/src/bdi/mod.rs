//! The branching diffusion with immigration as a process on finite
//! particle configurations.
//!
//! [`engine`] runs the continuous-time dynamics and streams what happens
//! into a [`Sink`]; the other submodules are sinks or post-processors:
//! trajectory recording, regenerative cycle statistics, discrete-time
//! observation with ground truth, and occupation histograms.

mod engine;
mod export;
mod observe;
mod occupation;
mod regenerative;

pub use engine::{
    run, simulate, simulate_branching_only, simulate_with, RunSummary, SimOptions, Sink, StopReason,
    StopRule, Trajectory, TrajectoryPoint, TrajectoryRecorder,
};
pub use export::{read_observations, read_trajectory, write_observations, write_trajectory};
pub use observe::{observe, ObservationRecorder, SegmentRecord};
pub use occupation::{occupation_histogram, BoxGrid, OccupationHistogram};
pub use regenerative::{
    particle_count_moments, run_regenerative, run_regenerative_par, run_regenerative_with, ExcursionStats,
    Functional, RegenerativeOptions,
};

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Read access shared by configurations with and without identities.
pub trait Particles {
    fn dim(&self) -> usize;
    fn flat_positions(&self) -> &[f64];

    fn len(&self) -> usize {
        self.flat_positions().len() / self.dim()
    }

    fn is_empty(&self) -> bool {
        self.flat_positions().is_empty()
    }

    fn particle(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.flat_positions()[i * d..(i + 1) * d]
    }
}

/// Ordered particle positions with hidden lineage identities. The empty
/// configuration is the void configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    dim: usize,
    positions: Vec<f64>,
    ids: Vec<u64>,
}

impl Configuration {
    pub fn void(dim: usize) -> Self {
        Self {
            dim,
            positions: Vec::new(),
            ids: Vec::new(),
        }
    }

    /// Builds a configuration from flat positions, numbering particles
    /// `0, 1, …`.
    pub fn from_positions(dim: usize, positions: Vec<f64>) -> Self {
        let n = positions.len() / dim;
        assert_eq!(n * dim, positions.len(), "positions must be a multiple of dim");
        Self {
            dim,
            positions,
            ids: (0..n as u64).collect(),
        }
    }

    /// # Panics
    /// If lengths disagree or ids repeat.
    pub fn with_ids(dim: usize, positions: Vec<f64>, ids: Vec<u64>) -> Self {
        assert_eq!(positions.len(), ids.len() * dim, "one id per particle");
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        assert!(sorted.windows(2).all(|w| w[0] != w[1]), "ids must be unique");
        Self { dim, positions, ids }
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn position_of(&self, id: u64) -> Option<&[f64]> {
        self.ids.iter().position(|&i| i == id).map(|i| self.particle(i))
    }

    pub(crate) fn positions_mut(&mut self) -> &mut [f64] {
        &mut self.positions
    }

    pub(crate) fn push(&mut self, x: &[f64], id: u64) {
        self.positions.extend_from_slice(x);
        self.ids.push(id);
    }

    /// Replaces particle `j` by `children` (flat), keeping the order of the
    /// remaining particles.
    pub(crate) fn replace(&mut self, j: usize, children: &[f64], child_ids: &[u64]) {
        let d = self.dim;
        self.positions.splice(j * d..(j + 1) * d, children.iter().copied());
        self.ids.splice(j..j + 1, child_ids.iter().copied());
    }

    /// Drops identities and sorts particles lexicographically by
    /// coordinates.
    pub fn observe(&self) -> Observation {
        Observation::canonical(self.dim, self.positions.clone())
    }

    pub fn max_id(&self) -> Option<u64> {
        self.ids.iter().copied().max()
    }
}

impl Particles for Configuration {
    fn dim(&self) -> usize {
        self.dim
    }
    fn flat_positions(&self) -> &[f64] {
        &self.positions
    }
}

/// A configuration as seen by the observer: positions only, in canonical
/// (lexicographically sorted) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    dim: usize,
    positions: Vec<f64>,
}

impl Observation {
    /// Sorts the particles of `positions` into canonical order.
    pub fn canonical(dim: usize, positions: Vec<f64>) -> Self {
        let mut rows: Vec<&[f64]> = positions.chunks(dim).collect();
        rows.sort_by(|a, b| lex_cmp(a, b));
        Self {
            dim,
            positions: rows.concat(),
        }
    }

    /// Keeps the given order (for hand-built test pairs).
    pub fn new(dim: usize, positions: Vec<f64>) -> Self {
        assert_eq!(positions.len() % dim, 0, "positions must be a multiple of dim");
        Self { dim, positions }
    }

    pub fn void(dim: usize) -> Self {
        Self {
            dim,
            positions: Vec::new(),
        }
    }
}

impl Particles for Observation {
    fn dim(&self) -> usize {
        self.dim
    }
    fn flat_positions(&self) -> &[f64] {
        &self.positions
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Death,
    Branch(usize),
    Immigration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLogEntry {
    pub time: f64,
    pub kind: EventKind,
    /// Dying or branching particle.
    pub parent_id: Option<u64>,
    pub immigrant_id: Option<u64>,
    pub child_ids: Vec<u64>,
    /// Flat scatter offsets `v_1, …, v_k` relative to the parent.
    pub child_offsets: Vec<f64>,
}

impl EventLogEntry {
    /// Change in particle count caused by the event.
    pub fn population_change(&self) -> i64 {
        match self.kind {
            EventKind::Immigration => 1,
            EventKind::Death => -1,
            EventKind::Branch(k) => k as i64 - 1,
        }
    }
}
