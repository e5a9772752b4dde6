//! Monte Carlo pointwise risk of the σ² estimator over a grid of
//! observation steps.
//!
//! cargo run --release --example risk_sweep

use bdi::model::builtin_preset;
use bdi::regress::{risk_sweep, Cube, SweepConfig, SweepRow};

fn main() -> bdi::Result<()> {
    let spec = builtin_preset("sigma-sine")?;
    let cfg = SweepConfig {
        cube: Cube::interval(0.0, 1.0)?,
        a: 0.5,
        beta: 2.0,
        lambda: 0.475,
        deltas: vec![2e-3, 1e-3, 5e-4],
        replicates: 20,
        dt_ratio: 10.0,
        time_cap: 2000.0,
        max_population: 100_000,
        max_events: 10_000_000,
        seed: 17,
    };
    println!("{}", SweepRow::csv_header());
    for row in risk_sweep(&spec, &cfg)? {
        println!("{}", row.csv_row());
    }
    Ok(())
}
