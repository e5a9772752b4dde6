//! Matches particles between successive snapshots and scores the
//! matching against the simulated lineage.
//!
//! cargo run --release --example reconstruct_increments

use bdi::bdi::{observe, simulate, Configuration};
use bdi::model::builtin_preset;
use bdi::reconstruct::{classify_against_truth, match_pair, reconstruct_increments, MatchResult};
use bdi::rng;

fn main() -> bdi::Result<()> {
    let spec = builtin_preset("reconstruct-demo")?;
    let lambda = 0.475;
    println!("{:>6} {:>7} {:>9} {:>9} {:>9}", "Δ", "pairs", "P(ident)", "P(wrong)", "P(CI)");
    for (i, delta) in [0.04, 0.02, 0.01].into_iter().enumerate() {
        let traj = simulate(&spec, Configuration::void(1), 300.0, delta / 20.0, &mut rng::stream(4, i as u64))?;
        let (obs, truth) = observe(&traj, delta)?;
        let matches: Vec<MatchResult> = obs.windows(2).map(|w| match_pair(&w[0], &w[1], delta, lambda)).collect();
        let s = classify_against_truth(&matches, &truth, delta, lambda)?;
        println!(
            "{delta:6} {:7} {:9.4} {:9.5} {:9.4}",
            s.n_pairs,
            s.p_identifiable(),
            s.p_wrong(),
            s.p_ci()
        );
        if i == 0 {
            let incs = reconstruct_increments(&obs, delta, lambda);
            let first = incs.iter().find(|r| r.increments.len() > 1);
            if let Some(r) = first {
                println!("  a reconstructed multi-particle increment: {:?}", r.increments);
            }
        }
    }
    Ok(())
}
