use std::fs;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::table::Table;
use crate::bdi::{
    particle_count_moments, run, run_regenerative_with, write_observations, write_trajectory, BoxGrid, Configuration,
    Functional, ObservationRecorder, OccupationHistogram, RegenerativeOptions, SimOptions, StopRule, TrajectoryRecorder,
};
use crate::error::{Error, Result};
use crate::model::{KillRate, ModelSpec, OffspringLaw};
use crate::reconstruct::{match_pair, ReconStats, ReconTally};
use crate::regress::{
    bandwidth, estimate_report, kernel_order_for, make_kernel, risk_sweep, simulate_scheme, window_cells, Cube,
    SweepConfig, SweepRow,
};
use crate::rng;
use crate::verify::{moment_formula, oracle_suite, OracleBudget, OracleReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Simulate,
    Occupation,
    Moments,
    Reconstruct,
    Scheme,
    Estimate,
    Sweep,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Occupation => "occupation",
            Command::Moments => "moments",
            Command::Reconstruct => "reconstruct",
            Command::Scheme => "scheme",
            Command::Estimate => "estimate",
            Command::Sweep => "sweep",
            Command::Verify => "verify",
        }
    }
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// Some caps were hit (abandoned cycles, dropped replicates, an
    /// unfilled scheme, failed oracles); results are still written.
    pub partial: bool,
}

fn header(cfg: &ExperimentConfig, cmd: Command) -> Result<Vec<(String, String)>> {
    let mut h = vec![("command".to_string(), cmd.name().to_string())];
    h.extend(cfg.header_pairs()?);
    Ok(h)
}

fn with_header(cfg: &ExperimentConfig, cmd: Command, mut t: Table) -> Result<Table> {
    let mut h = header(cfg, cmd)?;
    h.append(&mut t.header);
    t.header = h;
    Ok(t)
}

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn sim_options(cfg: &ExperimentConfig, dt: f64) -> SimOptions {
    SimOptions {
        dt,
        max_population: cfg.max_population,
        max_events: cfg.max_events,
    }
}

fn regen_options(cfg: &ExperimentConfig) -> RegenerativeOptions {
    RegenerativeOptions {
        sim: sim_options(cfg, cfg.dt),
        time_cap: cfg.time_cap,
        bootstrap_resamples: 400,
    }
}

/// Runs one subcommand and writes its files into `out`.
pub fn run_command(cmd: Command, cfg: &ExperimentConfig, out: &Path, json: bool) -> Result<RunOutcome> {
    fs::create_dir_all(out)?;
    let spec = cfg.model()?;
    let save = |name: &str, t: Table| -> Result<PathBuf> {
        let path = out.join(name);
        with_header(cfg, cmd, t)?.save(&path, json)?;
        Ok(path)
    };
    match cmd {
        Command::Simulate => simulate(cfg, &spec, cmd, out),
        Command::Occupation => {
            let (t, partial) = occupation_table(cfg, &spec)?;
            Ok(RunOutcome {
                files: vec![save("occupation.csv", t)?],
                partial,
            })
        }
        Command::Moments => {
            let (t, partial) = moments_table(cfg, &spec)?;
            Ok(RunOutcome {
                files: vec![save("moments.csv", t)?],
                partial,
            })
        }
        Command::Reconstruct => Ok(RunOutcome {
            files: vec![save("reconstruct.csv", reconstruct_table(cfg, &spec)?)?],
            partial: false,
        }),
        Command::Scheme => {
            let (t, partial) = scheme_table(cfg, &spec)?;
            Ok(RunOutcome {
                files: vec![save("scheme.csv", t)?],
                partial,
            })
        }
        Command::Estimate => {
            let (t, partial) = estimate_table(cfg, &spec)?;
            Ok(RunOutcome {
                files: vec![save("estimate.csv", t)?],
                partial,
            })
        }
        Command::Sweep => {
            let (t, partial) = sweep_table(cfg, &spec)?;
            Ok(RunOutcome {
                files: vec![save("sweep.csv", t)?],
                partial,
            })
        }
        Command::Verify => {
            let (t, partial) = verify_table(cfg, &spec)?;
            Ok(RunOutcome {
                files: vec![save("verify.csv", t)?],
                partial,
            })
        }
    }
}

fn header_lines(cfg: &ExperimentConfig, cmd: Command) -> Result<String> {
    Ok(header(cfg, cmd)?
        .into_iter()
        .map(|(k, v)| format!("# {k}={v}\n"))
        .collect())
}

fn simulate(cfg: &ExperimentConfig, spec: &ModelSpec, cmd: Command, out: &Path) -> Result<RunOutcome> {
    let mut rng = rng::stream(cfg.seed, 0);
    let mut rec = TrajectoryRecorder::new(spec.dim, cfg.dt);
    run(
        spec,
        Configuration::void(spec.dim),
        StopRule::Horizon(cfg.horizon),
        &sim_options(cfg, cfg.dt),
        &mut rng,
        &mut rec,
    )?;
    let traj = rec.trajectory;
    let mut files = Vec::new();
    let path = out.join("trajectory.csv");
    let mut buf = header_lines(cfg, cmd)?.into_bytes();
    write_trajectory(&traj, &mut buf)?;
    fs::write(&path, buf)?;
    files.push(path);
    // observations at Δ when it is a multiple of dt
    if let Ok((obs, _)) = crate::bdi::observe(&traj, cfg.delta) {
        let path = out.join("observations.csv");
        let mut buf = header_lines(cfg, cmd)?.into_bytes();
        write_observations(&obs, cfg.delta, &mut buf)?;
        fs::write(&path, buf)?;
        files.push(path);
    }
    Ok(RunOutcome { files, partial: false })
}

/// Occupation density on `[box_low, box_high]` from regenerative cycles.
pub fn occupation_table(cfg: &ExperimentConfig, spec: &ModelSpec) -> Result<(Table, bool)> {
    let grid = if spec.dim == 1 {
        BoxGrid::interval(cfg.box_low, cfg.box_high, cfg.bin_width)?
    } else {
        let n = ((cfg.box_high - cfg.box_low) / cfg.bin_width).round().max(1.0) as usize;
        BoxGrid::new(vec![cfg.box_low; spec.dim], vec![cfg.box_high; spec.dim], vec![n; spec.dim])?
    };
    let mut hist = OccupationHistogram::new(grid);
    let mut rng = rng::stream(cfg.seed, 0);
    let stats = run_regenerative_with(spec, cfg.cycles, &regen_options(cfg), &[], &mut rng, &mut hist)?;
    let mut t = Table::new("center,density");
    t.meta("total_time", f(hist.total_time));
    t.meta("mass_in_box", f(hist.mass_in_box()));
    t.meta("abandoned_cycles", stats.abandoned);
    for (i, g) in hist.density().into_iter().enumerate() {
        let c: Vec<String> = hist.grid.center(i).into_iter().map(f).collect();
        t.push_csv(&format!("{},{}", c.join(" "), f(g)));
    }
    Ok((t, stats.abandoned > 0))
}

fn constant_moments(spec: &ModelSpec) -> Option<(f64, f64, f64)> {
    match (&spec.kill_rate, &spec.offspring) {
        (KillRate::Constant(k), OffspringLaw::Constant(_)) => {
            let y = vec![0.0; spec.dim];
            Some((*k, spec.moment_mq(&y, 1), spec.moment_mq(&y, 2)))
        }
        _ => None,
    }
}

/// `μ(ℓ^p)` for `p = 1..=q`, with the quadrature oracle where it applies.
pub fn moments_table(cfg: &ExperimentConfig, spec: &ModelSpec) -> Result<(Table, bool)> {
    let functionals: Vec<Functional> = (1..=cfg.q).map(Functional::CountPower).collect();
    let mut rng = rng::stream(cfg.seed, 0);
    let stats = run_regenerative_with(spec, cfg.cycles, &regen_options(cfg), &functionals, &mut rng, ())?;
    let est = particle_count_moments(&stats, cfg.q)?;
    let mut t = Table::new("p,estimate,se,oracle,z");
    t.meta("cycles", stats.cycle_count());
    t.meta("abandoned_cycles", stats.abandoned);
    t.meta("total_time", f(stats.total_time()));
    let void = stats.void_fraction();
    t.meta("void_fraction", f(void.value));
    t.meta("void_fraction_se", f(void.std_error));
    for (i, e) in est.iter().enumerate() {
        let p = i as u32 + 1;
        let oracle = constant_moments(spec)
            .filter(|&(_, rho, _)| rho < 1.0 && p <= 2)
            .map(|(k, rho, m2)| moment_formula(spec.immigration_rate, k, rho, p, m2))
            .transpose()?;
        let (o, z) = match oracle {
            Some(o) => (f(o), f(e.z_score(o))),
            None => (String::new(), String::new()),
        };
        t.push_csv(&format!("{p},{},{},{o},{z}", f(e.value), f(e.std_error)));
    }
    Ok((t, stats.abandoned > 0))
}

/// Reconstruction statistics over `cfg.pairs` observed pairs for each Δ.
pub fn reconstruct_stats(spec: &ModelSpec, delta: f64, cfg: &ExperimentConfig, index: u64) -> Result<ReconStats> {
    let mut rng = rng::stream(cfg.seed, index);
    let dt = delta / cfg.dt_ratio;
    let mut tally = ReconTally::new(delta, cfg.lambda);
    let target = cfg.pairs;
    let lambda = cfg.lambda;
    let mut rec = ObservationRecorder::new(delta, dt, |x, y, truth| {
        tally.push(&match_pair(x, y, delta, lambda), truth);
        (tally.len() as u64) < target
    })?;
    let horizon = delta * (target as f64 + 1.0);
    let mut opts = sim_options(cfg, dt);
    opts.max_events = opts.max_events.max(u64::MAX / 2);
    run(spec, Configuration::void(spec.dim), StopRule::Horizon(horizon), &opts, &mut rng, &mut rec)?;
    drop(rec);
    Ok(tally.finish())
}

pub fn reconstruct_table(cfg: &ExperimentConfig, spec: &ModelSpec) -> Result<Table> {
    let mut t = Table::new(ReconStats::csv_header());
    for (i, &delta) in cfg.deltas.iter().enumerate() {
        let stats = reconstruct_stats(spec, delta, cfg, i as u64)?;
        t.push_csv(&stats.csv_row(delta, cfg.lambda));
    }
    Ok(t)
}

fn cube(cfg: &ExperimentConfig) -> Result<Cube> {
    Cube::interval(cfg.cube_low, cfg.cube_high)
}

/// Dump of the regression scheme at `delta` (all cells targeted).
pub fn scheme_table(cfg: &ExperimentConfig, spec: &ModelSpec) -> Result<(Table, bool)> {
    let mut rng = rng::stream(cfg.seed, 0);
    let run = simulate_scheme(
        spec,
        &Cube::new(vec![cfg.cube_low; spec.dim], cfg.cube_high - cfg.cube_low)?,
        cfg.delta,
        cfg.lambda,
        cfg.dt_ratio,
        None,
        &sim_options(cfg, 1.0),
        cfg.time_cap,
        &mut rng,
    )?;
    let s = &run.scheme;
    let mut t = Table::new("cell,filled,tau,particle,x,z,good");
    t.meta("n", s.partition.n);
    t.meta("tau_star", s.tau_star().map_or_else(String::new, |v| v.to_string()));
    t.meta("unfilled", s.unfilled().len());
    t.meta("simulated_time", f(run.simulated_time));
    let join = |v: &[f64]| v.iter().map(|&x| f(x)).collect::<Vec<_>>().join(" ");
    for (c, e) in s.entries.iter().enumerate() {
        match e {
            Some(e) => t.push_csv(&format!(
                "{c},true,{},{},{},{},{}",
                e.tau,
                e.particle,
                join(&e.x),
                join(&e.z),
                e.good.map_or_else(String::new, |g| g.to_string())
            )),
            None => t.push_csv(&format!("{c},false,,,,,")),
        }
    }
    Ok((t, !run.complete))
}

/// One estimate of `σ²(a)` from a single simulated stream.
pub fn estimate_table(cfg: &ExperimentConfig, spec: &ModelSpec) -> Result<(Table, bool)> {
    let cube = cube(cfg)?;
    let a = cfg.estimation_point();
    let p = crate::regress::partition(&cube, cfg.delta)?;
    let targets = window_cells(&p, a, bandwidth(p.n, cfg.beta))?;
    let mut rng = rng::stream(cfg.seed, 0);
    let run = simulate_scheme(
        spec,
        &cube,
        cfg.delta,
        cfg.lambda,
        cfg.dt_ratio,
        Some(&targets),
        &sim_options(cfg, 1.0),
        cfg.time_cap,
        &mut rng,
    )?;
    let mut t = Table::new("a,estimate,truth,delta,n,h,beta,lambda,squared_error,rescaled_error,any_bad");
    t.meta("simulated_time", f(run.simulated_time));
    if !run.complete {
        t.meta("status", "window not filled before time_cap");
        return Ok((t, true));
    }
    let kernel = make_kernel(kernel_order_for(cfg.beta))?;
    let truth = spec.diffusion_coefficient(&[a])[0];
    let r = estimate_report(&run.scheme, &kernel, cfg.beta, a, Some(truth))?;
    t.push_csv(&format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        f(r.a),
        f(r.estimate),
        f(truth),
        f(r.delta),
        r.n,
        f(r.h),
        f(r.beta),
        f(r.lambda),
        r.squared_error.map_or_else(String::new, f),
        r.rescaled_error.map_or_else(String::new, f),
        r.any_bad.map_or_else(String::new, |b| b.to_string()),
    ));
    Ok((t, false))
}

pub fn sweep_config(cfg: &ExperimentConfig) -> Result<SweepConfig> {
    Ok(SweepConfig {
        cube: cube(cfg)?,
        a: cfg.estimation_point(),
        beta: cfg.beta,
        lambda: cfg.lambda,
        deltas: cfg.deltas.clone(),
        replicates: cfg.replicates,
        dt_ratio: cfg.dt_ratio,
        time_cap: cfg.time_cap,
        max_population: cfg.max_population,
        max_events: cfg.max_events,
        seed: cfg.seed,
    })
}

pub fn sweep_table(cfg: &ExperimentConfig, spec: &ModelSpec) -> Result<(Table, bool)> {
    let rows = risk_sweep(spec, &sweep_config(cfg)?)?;
    let mut t = Table::new(SweepRow::csv_header());
    for r in &rows {
        t.push_csv(&r.csv_row());
    }
    Ok((t, rows.iter().any(|r| r.dropped > 0)))
}

pub fn verify_table(cfg: &ExperimentConfig, spec: &ModelSpec) -> Result<(Table, bool)> {
    let budget = OracleBudget {
        cycles: cfg.cycles,
        paths: cfg.paths,
        dt: cfg.dt,
    };
    let reports = oracle_suite(spec, &budget, &mut rng::stream(cfg.seed, 0))?;
    let mut t = Table::new(OracleReport::csv_header());
    for r in &reports {
        t.push_csv(&r.csv_row());
    }
    let all_pass = reports.iter().all(|r| r.pass);
    t.meta("all_pass", all_pass);
    if reports.is_empty() {
        return Err(Error::Config("no oracle applies to this model".into()));
    }
    Ok((t, !all_pass))
}
