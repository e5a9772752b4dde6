//! Histogram of the invariant occupation measure for Brownian particles
//! immigrating at 0 and dying at rate 1, next to its closed form.
//!
//! cargo run --release --example occupation_density

use bdi::bdi::{run_regenerative_with, BoxGrid, OccupationHistogram, RegenerativeOptions};
use bdi::model::builtin_preset;
use bdi::rng;
use bdi::verify::pure_death_occupation_density;

fn main() -> bdi::Result<()> {
    let spec = builtin_preset("pure-death-bm")?;
    let mut hist = OccupationHistogram::new(BoxGrid::interval(-2.0, 2.0, 0.1)?);
    // a fine step keeps the newborn-at-origin bias out of the center bin
    let opts = RegenerativeOptions::new(0.001);
    run_regenerative_with(&spec, 10_000, &opts, &[], &mut rng::stream(3, 0), &mut hist)?;

    println!("total time {:.0}, mass in [-2, 2] {:.4}", hist.total_time, hist.mass_in_box());
    println!("{:>6} {:>9} {:>9}", "z", "γ̂(z)", "γ̄(z)");
    for (i, g) in hist.density().iter().enumerate().step_by(2) {
        let z = hist.grid.center(i)[0];
        let exact = pure_death_occupation_density(1.0, 1.0, z);
        println!("{z:6.2} {g:9.4} {exact:9.4}  {}", "#".repeat((g * 60.0) as usize));
    }
    Ok(())
}
