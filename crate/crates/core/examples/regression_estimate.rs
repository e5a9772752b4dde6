//! Builds the regression scheme from one simulated observation stream and
//! estimates σ²(a) with the kernel estimator.
//!
//! cargo run --release --example regression_estimate

use bdi::bdi::SimOptions;
use bdi::model::builtin_preset;
use bdi::regress::{
    bandwidth, estimate_report, kernel_order_for, make_kernel, partition, simulate_scheme, window_cells, Cube,
};
use bdi::rng;

fn main() -> bdi::Result<()> {
    let spec = builtin_preset("sigma-sine")?;
    let (delta, lambda, beta) = (2e-4, 0.475, 2.0);
    let cube = Cube::interval(0.0, 1.0)?;
    let run = simulate_scheme(&spec, &cube, delta, lambda, 10.0, None, &SimOptions::new(1.0), 1000.0, &mut rng::stream(8, 0))?;
    let s = &run.scheme;
    println!(
        "n={} cells, filled {} after t={:.1} (τ*={:?} observed pairs)",
        s.partition.n_cells(),
        s.n_filled(),
        run.simulated_time,
        s.tau_star()
    );
    let kernel = make_kernel(kernel_order_for(beta))?;
    let p = partition(&cube, delta)?;
    for a in [0.4, 0.5, 0.6] {
        let h = bandwidth(p.n, beta);
        if window_cells(&p, a, h).is_err() {
            println!("a={a}: window [a-h, a+h] leaves the cube (h={h:.3})");
            continue;
        }
        let truth = spec.diffusion_coefficient(&[a])[0];
        let r = estimate_report(s, &kernel, beta, a, Some(truth))?;
        println!("a={a}: σ̂²={:.4}  σ²={truth:.4}  h={:.3}", r.estimate, r.h);
    }
    Ok(())
}
