use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The cube `A = Π_j [low_j, low_j + edge]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub low: Vec<f64>,
    pub edge: f64,
}

impl Cube {
    pub fn new(low: Vec<f64>, edge: f64) -> Result<Self> {
        if low.is_empty() || low.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("cube", "needs a finite corner in at least one dimension"));
        }
        if !(edge > 0.0 && edge.is_finite()) {
            return Err(Error::param("cube", "edge length must be positive"));
        }
        Ok(Self { low, edge })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a], b - a)
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn high(&self, j: usize) -> f64 {
        self.low[j] + self.edge
    }

    pub fn center(&self) -> Vec<f64> {
        self.low.iter().map(|l| l + 0.5 * self.edge).collect()
    }
}

/// `n^d` congruent cells of edge `L/n` with `n = ⌊L Δ^{-1/(2d)}⌋`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellPartition {
    pub cube: Cube,
    pub n: usize,
}

/// Cells per axis; the relative slack absorbs rounding in `Δ^{-1/(2d)}`
/// (`(10⁻⁴)^{-1/2}` evaluates to `99.99999999999997`).
pub fn cells_per_axis(edge: f64, delta: f64, d: usize) -> f64 {
    (edge * delta.powf(-1.0 / (2.0 * d as f64)) * (1.0 + 1e-12)).floor()
}

pub fn partition(cube: &Cube, delta: f64) -> Result<CellPartition> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param("delta", "must be positive"));
    }
    let n = cells_per_axis(cube.edge, delta, cube.dim());
    if n < 1.0 {
        return Err(Error::EmptyPartition { edge: cube.edge, delta });
    }
    Ok(CellPartition {
        cube: cube.clone(),
        n: n as usize,
    })
}

impl CellPartition {
    pub fn dim(&self) -> usize {
        self.cube.dim()
    }

    pub fn n_cells(&self) -> usize {
        self.n.pow(self.dim() as u32)
    }

    pub fn cell_len(&self) -> f64 {
        self.cube.edge / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_len().powi(self.dim() as i32)
    }

    /// Axis index of coordinate `x` along axis `j`; the upper face of the
    /// cube belongs to the last cell.
    pub fn axis_index(&self, j: usize, x: f64) -> Option<usize> {
        let low = self.cube.low[j];
        if !(x >= low && x <= self.cube.high(j)) {
            return None;
        }
        let w = self.cell_len();
        let mut i = (((x - low) / w).floor() as usize).min(self.n - 1);
        // agree with the corners reported by `cell_bounds`
        if i + 1 < self.n && x >= low + (i + 1) as f64 * w {
            i += 1;
        } else if i > 0 && x < low + i as f64 * w {
            i -= 1;
        }
        Some(i)
    }

    /// Flat row-major index of the cell containing `x`.
    pub fn cell_of(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for (j, &xj) in x.iter().enumerate() {
            idx = idx * self.n + self.axis_index(j, xj)?;
        }
        Some(idx)
    }

    pub fn multi_index(&self, mut cell: usize) -> Vec<usize> {
        let mut alpha = vec![0; self.dim()];
        for a in alpha.iter_mut().rev() {
            *a = cell % self.n;
            cell /= self.n;
        }
        alpha
    }

    /// `(low, high)` corners of a cell.
    pub fn cell_bounds(&self, cell: usize) -> (Vec<f64>, Vec<f64>) {
        let w = self.cell_len();
        let alpha = self.multi_index(cell);
        let low: Vec<f64> = alpha.iter().enumerate().map(|(j, &a)| self.cube.low[j] + a as f64 * w).collect();
        let high = low.iter().map(|l| l + w).collect();
        (low, high)
    }

    pub fn contains(&self, cell: usize, x: &[f64]) -> bool {
        self.cell_of(x) == Some(cell)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        let p = partition(&Cube::interval(0.0, 1.0).unwrap(), 1e-4).unwrap();
        assert_eq!(p.n, 100);
        assert!((p.cell_len() - 0.01).abs() < 1e-15);
        let p2 = partition(&Cube::new(vec![0.0, 0.0], 1.0).unwrap(), 1e-4).unwrap();
        assert_eq!(p2.n, 10);
        assert_eq!(p2.n_cells(), 100);
        assert!(matches!(
            partition(&Cube::interval(0.0, 1.0).unwrap(), 4.0),
            Err(Error::EmptyPartition { .. })
        ));
        assert_eq!(partition(&Cube::interval(0.0, 1.0).unwrap(), 4e-4).unwrap().n, 50);
    }

    #[test]
    fn cells_tile_the_cube() {
        let p = partition(&Cube::new(vec![-1.0, 2.0], 2.0).unwrap(), 1e-4).unwrap();
        for cell in 0..p.n_cells() {
            let (lo, hi) = p.cell_bounds(cell);
            let mid: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
            assert_eq!(p.cell_of(&mid), Some(cell));
            assert_eq!(p.cell_of(&lo), Some(cell));
        }
        assert_eq!(p.cell_of(&[1.0, 4.0]), Some(p.n_cells() - 1));
        assert_eq!(p.cell_of(&[1.0 + 1e-12, 3.0]), None);
    }
}
