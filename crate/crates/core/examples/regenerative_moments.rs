//! Stationary particle-count moments by regenerative cycles, checked
//! against the M/M/∞ and ODE oracles.
//!
//! cargo run --release --example regenerative_moments

use bdi::bdi::{particle_count_moments, run_regenerative_par, Functional, RegenerativeOptions};
use bdi::model::builtin_preset;
use bdi::verify::{mm_infinity_moments, moment_formula};

fn main() -> bdi::Result<()> {
    let opts = RegenerativeOptions::new(0.01);
    let counts = [Functional::CountPower(1), Functional::CountPower(2)];

    let spec = builtin_preset("mm-inf")?;
    let stats = run_regenerative_par(&spec, 4000, &opts, &counts, 11, 4)?;
    let est = particle_count_moments(&stats, 2)?;
    let (m1, m2) = mm_infinity_moments(2.0, 1.0)?;
    println!("mm-inf, {} cycles over t={:.0}", stats.cycle_count(), stats.total_time());
    println!("  μ(ℓ)  = {:.4} ± {:.4}   (Poisson: {m1})", est[0].value, est[0].std_error);
    println!("  μ(ℓ²) = {:.4} ± {:.4}   (Poisson: {m2})", est[1].value, est[1].std_error);

    // local binary branching p0 = 3/4, p2 = 1/4
    let spec = builtin_preset("binary-half")?;
    let stats = run_regenerative_par(&spec, 4000, &opts, &counts, 12, 4)?;
    let est = particle_count_moments(&stats, 2)?;
    let exact = moment_formula(1.0, 1.0, 0.5, 2, 1.0)?;
    println!("binary-half");
    println!("  μ(ℓ²) = {:.4} ± {:.4}   (ODE: {exact:.6})", est[1].value, est[1].std_error);
    println!("  P(void) = {:.4}", stats.void_fraction().value);
    Ok(())
}
