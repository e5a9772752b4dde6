use serde::Serialize;

use super::partition::CellPartition;
use crate::bdi::{Observation, Particles, SegmentRecord};
use crate::error::{Error, Result};
use crate::reconstruct::{match_pair, MatchResult};

/// One filled cell: the first identifiable pair with a particle in the
/// cell, that particle's position and its rescaled increment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeEntry {
    pub tau: u64,
    /// Canonical index `m(α)` of the chosen particle in `η_{τΔ}`.
    pub particle: usize,
    pub x: Vec<f64>,
    /// `(y_{π(m)} - x_m) / √Δ`.
    pub z: Vec<f64>,
    /// Whether the true segment at `τ` was CI; `None` without truth.
    pub good: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionScheme {
    pub partition: CellPartition,
    pub delta: f64,
    pub lambda: f64,
    pub entries: Vec<Option<SchemeEntry>>,
    /// Observed pairs consumed so far.
    pub pairs_seen: u64,
}

impl RegressionScheme {
    pub fn new(partition: CellPartition, delta: f64, lambda: f64) -> Self {
        let n = partition.n_cells();
        Self {
            partition,
            delta,
            lambda,
            entries: vec![None; n],
            pairs_seen: 0,
        }
    }

    pub fn n_filled(&self) -> usize {
        self.entries.iter().filter(|e| e.is_some()).count()
    }

    pub fn unfilled(&self) -> Vec<usize> {
        (0..self.entries.len()).filter(|&i| self.entries[i].is_none()).collect()
    }

    /// `τ* = max_α τ_α` over filled cells.
    pub fn tau_star(&self) -> Option<u64> {
        self.entries.iter().flatten().map(|e| e.tau).max()
    }

    /// Feeds the pair `(η_{iΔ}, η_{(i+1)Δ})`; returns the number of cells it
    /// filled.
    pub fn push(&mut self, x: &Observation, y: &Observation, truth: Option<&SegmentRecord>) -> usize {
        let i = self.pairs_seen;
        self.pairs_seen += 1;
        let perm = match match_pair(x, y, self.delta, self.lambda) {
            MatchResult::Identified(p) => p,
            MatchResult::NotIdentifiable(_) => return 0,
        };
        let mut good = None;
        let scale = self.delta.sqrt().recip();
        let mut filled = 0;
        for (m, &j) in perm.iter().enumerate() {
            let xm = x.particle(m);
            let Some(cell) = self.partition.cell_of(xm) else { continue };
            if self.entries[cell].is_some() {
                continue;
            }
            let good = *good.get_or_insert_with(|| truth.map(|t| t.ci_flag(self.delta, self.lambda)));
            self.entries[cell] = Some(SchemeEntry {
                tau: i,
                particle: m,
                x: xm.to_vec(),
                z: y.particle(j).iter().zip(xm).map(|(b, a)| (b - a) * scale).collect(),
                good,
            });
            filled += 1;
        }
        filled
    }

    pub fn cells_filled(&self, cells: &[usize]) -> bool {
        cells.iter().all(|&c| self.entries[c].is_some())
    }
}

/// Builds the scheme from a finite observation stream; cells not reached
/// stay unfilled. `truth`, if given, must hold one record per pair.
pub fn fill_scheme(
    observations: &[Observation],
    truth: Option<&[SegmentRecord]>,
    partition: &CellPartition,
    delta: f64,
    lambda: f64,
) -> Result<RegressionScheme> {
    let n_pairs = observations.len().saturating_sub(1);
    if let Some(t) = truth {
        if t.len() != n_pairs {
            return Err(Error::LengthMismatch {
                left: n_pairs,
                right: t.len(),
            });
        }
    }
    let mut scheme = RegressionScheme::new(partition.clone(), delta, lambda);
    for (i, w) in observations.windows(2).enumerate() {
        scheme.push(&w[0], &w[1], truth.map(|t| &t[i]));
        if scheme.n_filled() == scheme.entries.len() {
            break;
        }
    }
    Ok(scheme)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::partition::{partition, Cube};

    fn unit(delta: f64) -> CellPartition {
        partition(&Cube::interval(0.0, 1.0).unwrap(), delta).unwrap()
    }

    #[test]
    fn frozen_particle_fills_its_cell_with_zero() {
        let p = unit(1e-4);
        let x = Observation::new(1, vec![0.005]);
        let s = fill_scheme(&[x.clone(), x], None, &p, 1e-4, 0.475).unwrap();
        let e = s.entries[0].as_ref().unwrap();
        assert_eq!((e.tau, e.particle), (0, 0));
        assert_eq!(e.z, vec![0.0]);
        assert_eq!(s.n_filled(), 1);
        assert_eq!(s.tau_star(), Some(0));
        assert_eq!(s.unfilled().len(), 99);
    }

    #[test]
    fn two_particles_fill_two_cells_at_once() {
        let p = unit(1e-4);
        let x = Observation::new(1, vec![0.105, 0.705]);
        let y = Observation::new(1, vec![0.106, 0.703]);
        let s = fill_scheme(&[x, y], None, &p, 1e-4, 0.475).unwrap();
        let a = s.entries[10].as_ref().unwrap();
        let b = s.entries[70].as_ref().unwrap();
        assert_eq!((a.tau, b.tau), (0, 0));
        assert_ne!(a.particle, b.particle);
        assert!((a.z[0] - 0.1).abs() < 1e-9 && (b.z[0] + 0.2).abs() < 1e-9);
    }

    #[test]
    fn first_identifiable_pair_wins() {
        let p = unit(1e-2);
        let o = |v: f64| Observation::new(1, vec![v]);
        let stream = [o(0.55), o(0.95), o(0.96), o(0.56), o(0.57)];
        let s = fill_scheme(&stream, None, &p, 1e-2, 0.4).unwrap();
        // jumps of 0.4 exceed Δ^λ ≈ 0.158, so pairs 0 and 2 are not identifiable
        assert_eq!(s.entries[9].as_ref().unwrap().tau, 1);
        assert_eq!(s.entries[5].as_ref().unwrap().tau, 3);
        assert!(s.entries[5].as_ref().unwrap().good.is_none());
    }

    #[test]
    fn truth_length_is_checked() {
        let p = unit(1e-2);
        let x = Observation::new(1, vec![0.5]);
        assert!(fill_scheme(&[x.clone(), x], Some(&[]), &p, 1e-2, 0.4).is_err());
    }
}
