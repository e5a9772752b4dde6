use std::path::Path;
use std::process::Command as Process;

use bdi::cli::{run_command, Command, ExperimentConfig, Table};

fn small(extra: &[&str]) -> ExperimentConfig {
    let mut o: Vec<String> = [
        "cycles=200",
        "paths=500",
        "horizon=3",
        "pairs=500",
        "deltas=[0.02, 0.01]",
        "replicates=3",
        "time_cap=200",
        "seed=9",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    o.extend(extra.iter().map(|s| s.to_string()));
    ExperimentConfig::load(None, &o).unwrap()
}

fn setup(cmd: Command) -> ExperimentConfig {
    match cmd {
        Command::Reconstruct => small(&["model.preset=reconstruct-demo"]),
        Command::Scheme | Command::Estimate | Command::Sweep => small(&[
            "model.preset=sigma-sine",
            "delta=0.004",
            "deltas=[0.004]",
            "cube_low=-1",
            "cube_high=2",
            "a=0.5",
            "dt_ratio=10",
        ]),
        _ => small(&[]),
    }
}

const ALL: [Command; 8] = [
    Command::Simulate,
    Command::Occupation,
    Command::Moments,
    Command::Reconstruct,
    Command::Scheme,
    Command::Estimate,
    Command::Sweep,
    Command::Verify,
];

#[test]
fn every_subcommand_is_deterministic() {
    for cmd in ALL {
        let cfg = setup(cmd);
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let fa = run_command(cmd, &cfg, a.path(), false).unwrap().files;
        let fb = run_command(cmd, &cfg, b.path(), false).unwrap().files;
        assert!(!fa.is_empty(), "{cmd:?}");
        for (x, y) in fa.iter().zip(&fb) {
            let (tx, ty) = (std::fs::read_to_string(x).unwrap(), std::fs::read_to_string(y).unwrap());
            assert_eq!(tx, ty, "{cmd:?}: {}", x.display());
            assert!(tx.lines().any(|l| l == "# seed=9"), "{cmd:?} header lacks the seed");
            assert!(tx.lines().any(|l| l.starts_with("# model.name=")), "{cmd:?}");
        }
    }
}

#[test]
fn seeds_change_bodies() {
    let body = |seed: &str| {
        let cfg = small(&[&format!("seed={seed}")]);
        let dir = tempfile::tempdir().unwrap();
        let f = &run_command(Command::Moments, &cfg, dir.path(), false).unwrap().files[0];
        Table::load(f).unwrap().body()
    };
    assert_ne!(body("1"), body("2"));
}

#[test]
fn tables_parse_back_with_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(Command::Reconstruct);
    let f = &run_command(Command::Reconstruct, &cfg, dir.path(), true).unwrap().files[0];
    let t = Table::load(f).unwrap();
    assert_eq!(t.rows.len(), 2);
    assert_eq!(t.column_f64("delta").unwrap(), vec![0.02, 0.01]);
    assert!(t.column_f64("n_pairs").unwrap().iter().all(|&n| n == 500.0));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(f.with_extension("json")).unwrap()).unwrap();
    assert_eq!(json["columns"][0], "delta");
}

fn bin(args: &[&str], out: &Path) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_bdi"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = bin(&["moments", "--seed", "3", "--set", "cycles=100"], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let t = Table::load(&dir.path().join("moments.csv")).unwrap();
    assert_eq!(t.header_value("seed"), Some("3"));

    let bad = bin(&["moments", "--set", "lambda=0.9"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("lambda"));

    let unknown = bin(&["frobnicate"], dir.path());
    assert_ne!(unknown.status.code(), Some(0));
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    std::fs::write(&path, "seed = 4\ncycles = 100\n[model]\npreset = \"mm-inf\"\nimmigration_rate = 3.0\n").unwrap();
    let out = bin(&["moments", "--config", path.to_str().unwrap(), "--set", "q=1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let t = Table::load(&dir.path().join("moments.csv")).unwrap();
    assert_eq!(t.header_value("model.immigration_rate"), Some("3.0"));
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.column_f64("oracle").unwrap(), vec![3.0]);
}
