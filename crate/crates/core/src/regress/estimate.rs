use serde::Serialize;

use super::kernel::Kernel;
use super::partition::CellPartition;
use super::scheme::RegressionScheme;
use crate::error::{Error, Result};

/// `λ₀(β) = 1/2 - 1/(8(2β+1)) = (8β+3)/(16β+8)`.
pub fn critical_lambda(beta: f64) -> Result<f64> {
    if !(beta >= 2.0) || !beta.is_finite() {
        return Err(Error::param("beta", "smoothness must be a finite number ≥ 2"));
    }
    Ok((8.0 * beta + 3.0) / (16.0 * beta + 8.0))
}

/// `h = n^{-1/(2β+1)}`.
pub fn bandwidth(n: usize, beta: f64) -> f64 {
    (n as f64).powf(-1.0 / (2.0 * beta + 1.0))
}

/// Cells meeting the open window `(a - h, a + h)`; the window must lie in
/// the cube.
pub fn window_cells(partition: &CellPartition, a: f64, h: f64) -> Result<Vec<usize>> {
    if partition.dim() != 1 {
        return Err(Error::param("dim", "kernel estimation is one-dimensional"));
    }
    let (lo, hi) = (partition.cube.low[0], partition.cube.high(0));
    if !(a - h >= lo && a + h <= hi) {
        return Err(Error::EstimationWindow {
            a,
            reason: format!("[{}, {}] is not inside [{lo}, {hi}]", a - h, a + h),
        });
    }
    let first = partition.axis_index(0, a - h).unwrap_or(0);
    let mut last = partition.axis_index(0, a + h).unwrap_or(partition.n - 1);
    // a right edge exactly on a cell boundary does not enter the next cell
    if last > first && partition.cell_bounds(last).0[0] >= a + h {
        last -= 1;
    }
    Ok((first..=last).collect())
}

/// `Σ len · y · K_h(x - a)` over `(x, y)` pairs.
pub fn kernel_sum<I>(points: I, cell_len: f64, kernel: &Kernel, h: f64, a: f64) -> f64
where
    I: IntoIterator<Item = (f64, f64)>,
{
    points
        .into_iter()
        .map(|(x, y)| cell_len * y * kernel.scaled(x - a, h))
        .sum()
}

/// Explicit bound on `nh |Σ_α len(A_α) K_h(X_α - a) - 1|` for a kernel
/// that is Lipschitz on the real line: each of the at most `2h/len + 2`
/// cells in the window contributes at most `Lip · len² / h²`.
pub fn riemann_normalization_bound(kernel: &Kernel, edge: f64, n: usize, h: f64) -> f64 {
    let nh = n as f64 * h;
    2.0 * kernel.lipschitz_constant * edge * (1.0 + edge / nh)
}

/// `σ̂²(a) = Σ_α len(A_α) Z_α² K_h(X_α - a)` with `h = n^{-1/(2β+1)}`.
pub fn estimate_sigma2(scheme: &RegressionScheme, kernel: &Kernel, beta: f64, a: f64) -> Result<f64> {
    let p = &scheme.partition;
    let h = bandwidth(p.n, beta);
    let cells = window_cells(p, a, h)?;
    let mut points = Vec::with_capacity(cells.len());
    for &c in &cells {
        let e = scheme.entries[c].as_ref().ok_or(Error::UnfilledCell { cell: c })?;
        points.push((e.x[0], e.z[0] * e.z[0]));
    }
    Ok(kernel_sum(points, p.cell_len(), kernel, h, a))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub a: f64,
    pub estimate: f64,
    pub truth: Option<f64>,
    pub delta: f64,
    pub n: usize,
    pub h: f64,
    pub beta: f64,
    pub lambda: f64,
    pub squared_error: Option<f64>,
    /// `n^{2β/(2β+1)} · squared_error`.
    pub rescaled_error: Option<f64>,
    /// Some entry in the estimation window came from a non-CI segment.
    pub any_bad: Option<bool>,
}

pub fn estimate_report(
    scheme: &RegressionScheme,
    kernel: &Kernel,
    beta: f64,
    a: f64,
    truth: Option<f64>,
) -> Result<EstimateReport> {
    let estimate = estimate_sigma2(scheme, kernel, beta, a)?;
    let n = scheme.partition.n;
    let h = bandwidth(n, beta);
    let cells = window_cells(&scheme.partition, a, h)?;
    let goods: Option<Vec<bool>> = cells
        .iter()
        .map(|&c| scheme.entries[c].as_ref().and_then(|e| e.good))
        .collect();
    let squared_error = truth.map(|t| (estimate - t).powi(2));
    Ok(EstimateReport {
        a,
        estimate,
        truth,
        delta: scheme.delta,
        n,
        h,
        beta,
        lambda: scheme.lambda,
        squared_error,
        rescaled_error: squared_error.map(|e| (n as f64).powf(2.0 * beta / (2.0 * beta + 1.0)) * e),
        any_bad: goods.map(|g| g.iter().any(|ok| !ok)),
    })
}
