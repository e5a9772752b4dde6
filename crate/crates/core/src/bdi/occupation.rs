use serde::{Deserialize, Serialize};

use super::engine::{Sink, Trajectory};
use super::{Configuration, Particles};
use crate::error::{Error, Result};

/// Regular bins over the box `[low, high)` in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxGrid {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
    pub bins: Vec<usize>,
}

impl BoxGrid {
    pub fn new(low: Vec<f64>, high: Vec<f64>, bins: Vec<usize>) -> Result<Self> {
        if low.len() != high.len() || low.len() != bins.len() || low.is_empty() {
            return Err(Error::param("grid", "low, high and bins need one entry per dimension"));
        }
        if low.iter().zip(&high).any(|(l, h)| !(h > l)) || bins.contains(&0) {
            return Err(Error::param("grid", "bins must have positive volume"));
        }
        Ok(Self { low, high, bins })
    }

    /// One-dimensional grid with bins of (approximately) the given width.
    pub fn interval(low: f64, high: f64, width: f64) -> Result<Self> {
        let n = ((high - low) / width).round().max(1.0) as usize;
        Self::new(vec![low], vec![high], vec![n])
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn n_bins(&self) -> usize {
        self.bins.iter().product()
    }

    pub fn bin_volume(&self) -> f64 {
        (0..self.dim())
            .map(|j| (self.high[j] - self.low[j]) / self.bins[j] as f64)
            .product()
    }

    /// Flat (row-major, last axis fastest) bin index of `x`.
    pub fn index(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for j in 0..self.dim() {
            let w = (self.high[j] - self.low[j]) / self.bins[j] as f64;
            let u = ((x[j] - self.low[j]) / w).floor();
            if !(u >= 0.0 && u < self.bins[j] as f64) {
                return None;
            }
            idx = idx * self.bins[j] + u as usize;
        }
        Some(idx)
    }

    pub fn center(&self, mut idx: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.dim()];
        for j in (0..self.dim()).rev() {
            let w = (self.high[j] - self.low[j]) / self.bins[j] as f64;
            c[j] = self.low[j] + (idx % self.bins[j]) as f64 * w + 0.5 * w;
            idx /= self.bins[j];
        }
        c
    }
}

/// Time-integrated particle counts per bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationHistogram {
    pub grid: BoxGrid,
    pub bin_time: Vec<f64>,
    pub total_time: f64,
    /// `∫ ℓ(η_s) ds` including particles outside the box.
    pub particle_time: f64,
}

impl OccupationHistogram {
    pub fn new(grid: BoxGrid) -> Self {
        let n = grid.n_bins();
        Self {
            grid,
            bin_time: vec![0.0; n],
            total_time: 0.0,
            particle_time: 0.0,
        }
    }

    /// `γ̂(bin) = ∫ η_s(bin) ds / (total_time · vol)`.
    pub fn density(&self) -> Vec<f64> {
        if self.total_time == 0.0 {
            return vec![0.0; self.bin_time.len()];
        }
        let norm = self.total_time * self.grid.bin_volume();
        self.bin_time.iter().map(|b| b / norm).collect()
    }

    /// `Σ γ̂ · vol`, the time-average number of particles inside the box.
    pub fn mass_in_box(&self) -> f64 {
        if self.total_time == 0.0 {
            0.0
        } else {
            self.bin_time.iter().sum::<f64>() / self.total_time
        }
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.grid, other.grid, "histograms over different grids");
        for (a, b) in self.bin_time.iter_mut().zip(&other.bin_time) {
            *a += b;
        }
        self.total_time += other.total_time;
        self.particle_time += other.particle_time;
    }

    fn add(&mut self, h: f64, config: &Configuration) {
        self.total_time += h;
        self.particle_time += h * config.len() as f64;
        for i in 0..config.len() {
            if let Some(b) = self.grid.index(config.particle(i)) {
                self.bin_time[b] += h;
            }
        }
    }
}

impl Sink for OccupationHistogram {
    fn interval(&mut self, t0: f64, t1: f64, config: &Configuration) {
        self.add(t1 - t0, config);
    }
}

/// Histogram of a recorded trajectory, holding each recorded configuration
/// until the next record.
pub fn occupation_histogram(trajectory: &Trajectory, grid: BoxGrid) -> OccupationHistogram {
    let mut hist = OccupationHistogram::new(grid);
    for w in trajectory.points.windows(2) {
        let h = w[1].time - w[0].time;
        if h > 0.0 {
            hist.add(h, &w[0].config);
        }
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdi::{run, simulate, SimOptions, StopRule};
    use crate::model::builtin_preset;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_indexing_roundtrips_centers() {
        let g = BoxGrid::new(vec![0.0, -1.0], vec![1.0, 1.0], vec![4, 5]).unwrap();
        assert_eq!(g.n_bins(), 20);
        assert!((g.bin_volume() - 0.1).abs() < 1e-15);
        for i in 0..20 {
            assert_eq!(g.index(&g.center(i)), Some(i));
        }
        assert_eq!(g.index(&[1.0, 0.0]), None);
        assert!(BoxGrid::new(vec![0.0], vec![0.0], vec![1]).is_err());
    }

    #[test]
    fn empty_trajectory_gives_zero_histogram() {
        let mut spec = builtin_preset("pure-death-bm").unwrap();
        spec.immigration_rate = 0.0;
        let traj = simulate(&spec, Configuration::void(1), 2.0, 0.1, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let h = occupation_histogram(&traj, BoxGrid::interval(-1.0, 1.0, 0.1).unwrap());
        assert!(h.density().iter().all(|&g| g == 0.0));
        assert!((h.total_time - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mass_is_conserved_and_sink_matches_trajectory() {
        let spec = builtin_preset("binary-spread").unwrap();
        let grid = BoxGrid::interval(-50.0, 50.0, 0.5).unwrap();
        let traj = simulate(&spec, Configuration::void(1), 50.0, 0.01, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let from_traj = occupation_histogram(&traj, grid.clone());
        let mut streamed = OccupationHistogram::new(grid);
        run(
            &spec,
            Configuration::void(1),
            StopRule::Horizon(50.0),
            &SimOptions::new(0.01),
            &mut ChaCha8Rng::seed_from_u64(2),
            &mut streamed,
        )
        .unwrap();
        let mass: f64 = from_traj.density().iter().sum::<f64>() * from_traj.grid.bin_volume();
        assert!((mass - from_traj.particle_time / from_traj.total_time).abs() < 1e-9);
        assert!((from_traj.mass_in_box() - mass).abs() < 1e-12);
        for (a, b) in from_traj.bin_time.iter().zip(&streamed.bin_time) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
