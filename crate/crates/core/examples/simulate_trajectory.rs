//! Simulates the binary-spread preset for a few time units, prints the
//! event log and writes the trajectory and its observations to CSV.
//!
//! cargo run --release --example simulate_trajectory [out_dir]

use std::fs::File;
use std::io::BufWriter;

use bdi::bdi::{observe, simulate, write_observations, write_trajectory, Configuration, EventKind, Particles};
use bdi::model::builtin_preset;
use bdi::rng;

fn main() -> bdi::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| ".".into());
    let spec = builtin_preset("binary-spread")?;
    let mut rng = rng::stream(7, 0);
    let traj = simulate(&spec, Configuration::void(1), 5.0, 0.01, &mut rng)?;

    let mut population = 0i64;
    for e in &traj.events {
        population += e.population_change();
        let what = match e.kind {
            EventKind::Immigration => format!("immigrant #{}", e.immigrant_id.unwrap_or(0)),
            EventKind::Death => format!("#{} dies", e.parent_id.unwrap_or(0)),
            EventKind::Branch(k) => format!("#{} -> {k} children", e.parent_id.unwrap_or(0)),
        };
        println!("t={:8.4}  {what:<24} population {population}", e.time);
    }
    let last = traj.points.last().expect("nonempty trajectory");
    println!("end: t={} with {} particles", last.time, last.config.len());

    write_trajectory(&traj, &mut BufWriter::new(File::create(format!("{out}/trajectory.csv"))?))?;
    let (obs, segments) = observe(&traj, 0.1)?;
    write_observations(&obs, 0.1, &mut BufWriter::new(File::create(format!("{out}/observations.csv"))?))?;
    let quiet = segments.iter().filter(|s| !s.had_event).count();
    println!("{} observations at Δ=0.1, {quiet} of {} segments without events", obs.len(), segments.len());
    Ok(())
}
