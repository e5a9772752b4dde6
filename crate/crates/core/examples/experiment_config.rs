//! Drives the config-based experiment runner from code, the same way the
//! `bdi` binary does.
//!
//! cargo run --release --example experiment_config [out_dir]

use std::path::PathBuf;

use bdi::cli::{run_command, Command, ExperimentConfig, Table};

fn main() -> bdi::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "experiment-out".into()));
    let cfg = ExperimentConfig::load(
        None,
        &["model.preset=binary-half".into(), "cycles=3000".into(), "q=3".into(), "seed=5".into()],
    )?;
    let outcome = run_command(Command::Moments, &cfg, &out, false)?;
    for f in &outcome.files {
        let t = Table::load(f)?;
        println!("{} (model {})", f.display(), t.header_value("model.name").unwrap_or("?"));
        print!("{}", t.body());
    }
    Ok(())
}
