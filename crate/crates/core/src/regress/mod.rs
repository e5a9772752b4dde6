//! Nonparametric estimation of the diffusion coefficient from the
//! reconstructed increments: cell partition, regression scheme, kernels
//! of higher order and the pointwise kernel estimator.

mod estimate;
mod kernel;
mod partition;
mod scheme;
mod sweep;

pub use estimate::{
    bandwidth, critical_lambda, estimate_report, estimate_sigma2, kernel_sum, riemann_normalization_bound,
    window_cells, EstimateReport,
};
pub use kernel::{kernel_order_for, make_kernel, Kernel};
pub use partition::{cells_per_axis, partition, CellPartition, Cube};
pub use scheme::{fill_scheme, RegressionScheme, SchemeEntry};
pub use sweep::{risk_sweep, simulate_scheme, SchemeRun, SweepConfig, SweepRow};
