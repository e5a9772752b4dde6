use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::{bandwidth, critical_lambda, estimate_report, window_cells, EstimateReport};
use super::kernel::{kernel_order_for, make_kernel};
use super::partition::{partition, Cube};
use super::scheme::RegressionScheme;
use crate::bdi::{run, Configuration, ObservationRecorder, SimOptions, StopReason, StopRule};
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::rng;
use crate::stats::mean_se;

/// A scheme grown from one simulated observation stream.
#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub scheme: RegressionScheme,
    /// The target cells were all filled before the time cap.
    pub complete: bool,
    pub simulated_time: f64,
}

/// Simulates the process from `δ`, observes it every `Δ` (with Euler step
/// `Δ/dt_ratio`) and fills the regression scheme until every cell in
/// `targets` (all cells if `None`) is filled or `time_cap` is reached.
#[allow(clippy::too_many_arguments)]
pub fn simulate_scheme<R: Rng + ?Sized>(
    spec: &ModelSpec,
    cube: &Cube,
    delta: f64,
    lambda: f64,
    dt_ratio: f64,
    targets: Option<&[usize]>,
    opts: &SimOptions,
    time_cap: f64,
    rng: &mut R,
) -> Result<SchemeRun> {
    if cube.dim() != spec.dim {
        return Err(Error::LengthMismatch {
            left: cube.dim(),
            right: spec.dim,
        });
    }
    let p = partition(cube, delta)?;
    let all: Vec<usize> = (0..p.n_cells()).collect();
    let targets = targets.unwrap_or(&all).to_vec();
    let mut scheme = RegressionScheme::new(p, delta, lambda);
    let dt = delta / dt_ratio;
    let mut missing = targets.len();
    let mut rec = ObservationRecorder::new(delta, dt, |x, y, truth| {
        if scheme.push(x, y, Some(truth)) > 0 {
            missing = targets.iter().filter(|&&c| scheme.entries[c].is_none()).count();
        }
        missing > 0
    })?;
    let opts = SimOptions { dt, ..*opts };
    let summary = run(spec, Configuration::void(spec.dim), StopRule::Horizon(time_cap), &opts, rng, &mut rec)?;
    drop(rec);
    Ok(SchemeRun {
        complete: summary.reason == StopReason::SinkFinished,
        simulated_time: summary.end_time,
        scheme,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub cube: Cube,
    pub a: f64,
    pub beta: f64,
    pub lambda: f64,
    pub deltas: Vec<f64>,
    pub replicates: usize,
    pub dt_ratio: f64,
    /// Simulated-time budget per replicate.
    pub time_cap: f64,
    pub max_population: usize,
    pub max_events: u64,
    pub seed: u64,
}

/// One line of the risk table.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub delta: f64,
    pub n: usize,
    pub h: f64,
    pub lambda: f64,
    pub beta: f64,
    pub mse: f64,
    pub mse_se: f64,
    pub rescaled_mse: f64,
    pub rescaled_se: f64,
    /// Fraction of replicates with a non-CI entry in the estimation window.
    pub f_event_frequency: f64,
    pub replicates: usize,
    pub dropped: usize,
    pub mean_estimate: f64,
    pub truth: f64,
    #[serde(skip)]
    pub reports: Vec<EstimateReport>,
}

impl SweepRow {
    pub fn csv_header() -> &'static str {
        "delta,n,h,lambda,beta,mse,mse_se,rescaled_mse,rescaled_se,f_event_frequency,replicates,dropped,mean_estimate,truth"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.16e},{:.16e}",
            self.delta,
            self.n,
            self.h,
            self.lambda,
            self.beta,
            self.mse,
            self.mse_se,
            self.rescaled_mse,
            self.rescaled_se,
            self.f_event_frequency,
            self.replicates,
            self.dropped,
            self.mean_estimate,
            self.truth,
        )
    }
}

/// Monte Carlo pointwise risk of the kernel estimator at `a` for each `Δ`.
///
/// Replicate `r` of grid entry `i` uses `rng::substream(seed, i, r)`.
/// Replicates that hit the time, population or event caps are dropped.
pub fn risk_sweep(spec: &ModelSpec, cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if spec.dim != 1 {
        return Err(Error::param("dim", "risk sweeps are one-dimensional"));
    }
    let l0 = critical_lambda(cfg.beta)?;
    if !(cfg.lambda >= l0 && cfg.lambda < 0.5) {
        return Err(Error::param(
            "lambda",
            format!("must lie in [λ₀(β), 1/2) = [{l0}, 0.5), got {}", cfg.lambda),
        ));
    }
    if cfg.replicates == 0 {
        return Err(Error::param("replicates", "must be at least 1"));
    }
    let kernel = make_kernel(kernel_order_for(cfg.beta))?;
    let truth = spec.diffusion_coefficient(&[cfg.a])[0];
    let opts = SimOptions {
        dt: 1.0,
        max_population: cfg.max_population,
        max_events: cfg.max_events,
    };
    cfg.deltas
        .iter()
        .enumerate()
        .map(|(i, &delta)| {
            let p = partition(&cfg.cube, delta)?;
            let h = bandwidth(p.n, cfg.beta);
            let targets = window_cells(&p, cfg.a, h)?;
            let outcomes: Vec<Result<Option<EstimateReport>>> = (0..cfg.replicates)
                .into_par_iter()
                .map(|r| {
                    let mut rng = rng::substream(cfg.seed, i as u64, r as u64);
                    let res = simulate_scheme(
                        spec,
                        &cfg.cube,
                        delta,
                        cfg.lambda,
                        cfg.dt_ratio,
                        Some(&targets),
                        &opts,
                        cfg.time_cap,
                        &mut rng,
                    );
                    match res {
                        Ok(run) if run.complete => {
                            estimate_report(&run.scheme, &kernel, cfg.beta, cfg.a, Some(truth)).map(Some)
                        }
                        Ok(_) | Err(Error::Explosion { .. }) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect();
            let mut reports = Vec::new();
            for o in outcomes {
                if let Some(rep) = o? {
                    reports.push(rep);
                }
            }
            let se: Vec<f64> = reports.iter().filter_map(|r| r.squared_error).collect();
            let resc: Vec<f64> = reports.iter().filter_map(|r| r.rescaled_error).collect();
            let est: Vec<f64> = reports.iter().map(|r| r.estimate).collect();
            let bad = reports.iter().filter(|r| r.any_bad == Some(true)).count();
            let mse = mean_se(&se);
            let rescaled = mean_se(&resc);
            Ok(SweepRow {
                delta,
                n: p.n,
                h,
                lambda: cfg.lambda,
                beta: cfg.beta,
                mse: mse.value,
                mse_se: mse.std_error,
                rescaled_mse: rescaled.value,
                rescaled_se: rescaled.std_error,
                f_event_frequency: if reports.is_empty() {
                    f64::NAN
                } else {
                    bad as f64 / reports.len() as f64
                },
                replicates: reports.len(),
                dropped: cfg.replicates - reports.len(),
                mean_estimate: mean_se(&est).value,
                truth,
                reports,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtin_preset;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_config() -> SweepConfig {
        SweepConfig {
            // a wider cube keeps the coarse-grid window [a - h, a + h] inside A
            cube: Cube::interval(-1.0, 2.0).unwrap(),
            a: 0.5,
            beta: 2.0,
            lambda: 0.475,
            deltas: vec![4e-3],
            replicates: 4,
            dt_ratio: 10.0,
            time_cap: 200.0,
            max_population: 10_000,
            max_events: 1_000_000,
            seed: 1,
        }
    }

    #[test]
    fn lambda_below_critical_is_rejected() {
        let spec = builtin_preset("sigma-sine").unwrap();
        let mut cfg = small_config();
        cfg.lambda = 0.45;
        assert!(risk_sweep(&spec, &cfg).is_err());
    }

    #[test]
    fn small_sweep_runs_and_is_reproducible() {
        let spec = builtin_preset("sigma-sine").unwrap();
        let cfg = small_config();
        let a = risk_sweep(&spec, &cfg).unwrap();
        let b = risk_sweep(&spec, &cfg).unwrap();
        assert_eq!(a[0].csv_row(), b[0].csv_row());
        assert_eq!(a[0].replicates + a[0].dropped, 4);
        assert!(a[0].replicates > 0);
        assert_eq!(a[0].n, 47);
    }

    #[test]
    fn scheme_entries_respect_invariants() {
        let spec = builtin_preset("sigma-sine").unwrap();
        let cube = Cube::interval(0.0, 1.0).unwrap();
        let (delta, lambda) = (1e-3, 0.475);
        let run = simulate_scheme(
            &spec,
            &cube,
            delta,
            lambda,
            10.0,
            None,
            &SimOptions::new(1.0),
            300.0,
            &mut ChaCha8Rng::seed_from_u64(3),
        )
        .unwrap();
        assert!(run.complete);
        let bound = delta.powf(lambda - 0.5);
        let s = &run.scheme;
        for (c, e) in s.entries.iter().enumerate() {
            let e = e.as_ref().unwrap();
            assert!(s.partition.contains(c, &e.x));
            assert!(e.z[0].abs() < bound);
            assert!(e.tau <= s.tau_star().unwrap());
        }
    }
}
