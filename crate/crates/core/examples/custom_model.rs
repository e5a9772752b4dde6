//! A two-dimensional model assembled with the builder: Ornstein–Uhlenbeck
//! motion, a position-dependent kill rate and ternary offspring.
//!
//! cargo run --release --example custom_model

use std::sync::Arc;

use bdi::bdi::{particle_count_moments, run_regenerative, Configuration, Functional, Particles};
use bdi::model::{Drift, KillRate, ModelSpec, OffspringLaw, PointLaw, Scatter, Volatility};
use bdi::rng;

fn main() -> bdi::Result<()> {
    let spec = ModelSpec::builder(2)
        .name("ou-2d")
        .drift(Drift::OrnsteinUhlenbeck { rate: 1.0, mean: vec![0.0, 0.0] })
        .volatility(Volatility::Diagonal(vec![0.5, 1.0]))
        .kill_rate(KillRate::Custom(Arc::new(|y: &[f64]| 1.0 + 0.5 * y[0].tanh())))
        .kill_rate_bound(1.5)
        .offspring(OffspringLaw::Constant(vec![0.7, 0.1, 0.0, 0.2]))
        .scatter(Scatter::GaussianProduct { scale: 0.3 })
        .immigration(1.5, PointLaw::Uniform { low: vec![-1.0, -1.0], high: vec![1.0, 1.0] })
        .build()?;

    let right = Functional::Custom {
        name: "right_half".into(),
        f: Arc::new(|cfg: &Configuration| {
            (0..cfg.len()).filter(|&i| cfg.particle(i)[0] > 0.0).count() as f64
        }),
    };
    let stats = run_regenerative(&spec, 3000, 0.01, &[Functional::CountPower(1), Functional::CountPower(2), right], &mut rng::stream(21, 0))?;
    let m = particle_count_moments(&stats, 2)?;
    let r = stats.estimate_named("right_half")?;
    println!("mean particles {:.3} ± {:.3}, second moment {:.3}", m[0].value, m[0].std_error, m[1].value);
    println!("mean particles with x > 0: {:.3} ± {:.3}", r.value, r.std_error);
    println!(
        "mean cycle length {:.3}, lag-1 autocorrelation of cycle integrals {:.3}",
        stats.mean_cycle_length().value,
        stats.lag1(0)
    );
    Ok(())
}
