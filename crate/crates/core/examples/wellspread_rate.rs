//! Stationary probability that two particles are closer than ε in some
//! coordinate, which vanishes linearly as ε → 0.
//!
//! cargo run --release --example wellspread_rate

use bdi::bdi::{run_regenerative_par, Functional, RegenerativeOptions};
use bdi::model::builtin_preset;
use bdi::reconstruct::wellspread_measure_estimate;

fn main() -> bdi::Result<()> {
    let spec = builtin_preset("binary-spread")?;
    let eps = [0.8, 0.4, 0.2, 0.1, 0.05];
    let functionals: Vec<Functional> = eps.iter().map(|&e| Functional::NearPair(e)).collect();
    let stats = run_regenerative_par(&spec, 20_000, &RegenerativeOptions::new(0.01), &functionals, 2, 4)?;
    let est = wellspread_measure_estimate(&stats, &eps)?;
    let mut prev: Option<f64> = None;
    for (e, m) in eps.iter().zip(&est) {
        let ratio = prev.map_or(String::new(), |p| format!("ratio {:.3}", m.value / p));
        println!("ε={e:<5} μ(N(ε)) = {:.5} ± {:.5}  {ratio}", m.value, m.std_error);
        prev = Some(m.value);
    }
    Ok(())
}
