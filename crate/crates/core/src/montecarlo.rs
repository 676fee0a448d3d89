//! Ensembles of closed-loop runs against randomly perturbed plants.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{block, SpacecraftParams};
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, MetricOptions, Metrics};
use crate::sim::{run_closed_loop, PerturbationSpec, ScenarioConfig, TrajectoryRecord};

/// Terminal tolerances counting a run as docked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceThresholds {
    /// m
    pub position: f64,
    pub attitude: f64,
}

impl Default for ConvergenceThresholds {
    fn default() -> Self {
        Self {
            position: 0.1,
            attitude: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloOptions {
    pub thresholds: ConvergenceThresholds,
    pub metrics: MetricOptions,
    /// Evaluate the random-selection κ baseline in every run.
    pub kappa_baseline: bool,
    /// Keep the full trajectory of every run in the result.
    pub keep_records: bool,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        Self {
            thresholds: ConvergenceThresholds::default(),
            metrics: MetricOptions::default(),
            kappa_baseline: true,
            keep_records: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub index: usize,
    pub seed: u64,
    pub truth_params: SpacecraftParams,
    pub converged: bool,
    pub failure: Option<String>,
    pub median_kappa: f64,
    pub median_kappa_random: Option<f64>,
    pub metrics: Metrics,
}

/// Percentiles of a norm across runs at each control sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope {
    pub t: Vec<f64>,
    pub p05: Vec<f64>,
    pub p50: Vec<f64>,
    pub p95: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub runs: usize,
    pub converged_count: usize,
    pub failed_count: usize,
    pub thresholds: ConvergenceThresholds,
    pub max_terminal_position: f64,
    pub max_terminal_attitude: f64,
    pub max_thrust_n: f64,
    /// Pooled over every controller sample of every run.
    pub median_kappa: f64,
    pub median_kappa_random: Option<f64>,
    pub position_envelope: Envelope,
    pub attitude_envelope: Envelope,
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub runs: Vec<RunSummary>,
    pub summary: EnsembleSummary,
    /// Present when requested in [`MonteCarloOptions::keep_records`].
    pub records: Vec<TrajectoryRecord>,
}

/// Median by nearest rank after a total-order sort; `NaN` for empty input.
pub fn median(values: &mut [f64]) -> f64 {
    percentile(values, 50.0)
}

pub fn percentile(values: &mut [f64], pct: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let rank = ((pct / 100.0) * values.len() as f64).ceil() as usize;
    values[rank.clamp(1, values.len()) - 1]
}

struct RunOutput {
    summary: RunSummary,
    record: TrajectoryRecord,
}

fn single_run(
    base: &ScenarioConfig,
    perturb: &PerturbationSpec,
    options: &MonteCarloOptions,
    seed: u64,
    index: usize,
) -> Result<RunOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let truth = perturb.sample(&base.params, &mut rng)?;
    let run_seed = rng.next_u64();

    let mut cfg = base.clone();
    cfg.truth_params = Some(truth);
    cfg.disturbance_fraction = perturb.disturbance_fraction;
    cfg.kappa_baseline = options.kappa_baseline;
    cfg.seed = run_seed;

    let record = run_closed_loop(&cfg)?;
    let metrics = compute_metrics(&record, &options.metrics);
    let converged = !record.failed()
        && metrics.terminal_position_norm < options.thresholds.position
        && metrics.terminal_attitude_norm < options.thresholds.attitude;
    let mut kappas: Vec<f64> = record.controls.iter().map(|c| c.kappa).collect();
    let mut random: Vec<f64> = record.controls.iter().filter_map(|c| c.kappa_random).collect();
    Ok(RunOutput {
        summary: RunSummary {
            index,
            seed: run_seed,
            truth_params: truth,
            converged,
            failure: record.failure.clone(),
            median_kappa: median(&mut kappas),
            median_kappa_random: (!random.is_empty()).then(|| median(&mut random)),
            metrics,
        },
        record,
    })
}

fn envelope(records: &[&TrajectoryRecord], stride: usize, offset: usize) -> Envelope {
    let len = records.iter().map(|r| r.samples.len()).max().unwrap_or(0);
    let mut env = Envelope {
        t: Vec::new(),
        p05: Vec::new(),
        p50: Vec::new(),
        p95: Vec::new(),
    };
    for i in (0..len).step_by(stride.max(1)) {
        let mut v: Vec<f64> = records
            .iter()
            .filter_map(|r| r.samples.get(i))
            .map(|s| s.x.fixed_rows::<3>(offset).norm())
            .collect();
        let t = records.iter().find_map(|r| r.samples.get(i)).map(|s| s.t).unwrap_or(0.0);
        env.t.push(t);
        env.p05.push(percentile(&mut v, 5.0));
        env.p50.push(percentile(&mut v, 50.0));
        env.p95.push(percentile(&mut v, 95.0));
    }
    env
}

/// Runs `n_runs` perturbed simulations in parallel. The controller always uses
/// the nominal parameters of `cfg`; only the simulated plant is perturbed.
/// Results are ordered by run index and depend only on `seed`.
pub fn monte_carlo(
    cfg: &ScenarioConfig,
    perturb: &PerturbationSpec,
    n_runs: usize,
    seed: u64,
    options: &MonteCarloOptions,
) -> Result<Ensemble> {
    if n_runs == 0 {
        return Err(Error::InvalidParameter {
            name: "runs",
            reason: "at least one run is required".into(),
        });
    }
    cfg.validate()?;
    perturb.validate()?;

    let outputs: Vec<RunOutput> = (0..n_runs)
        .into_par_iter()
        .map(|i| single_run(cfg, perturb, options, seed, i))
        .collect::<Result<_>>()?;

    let substeps = cfg.substeps()?;
    let records: Vec<&TrajectoryRecord> = outputs.iter().map(|o| &o.record).collect();
    let position_envelope = envelope(&records, substeps, block::P);
    let attitude_envelope = envelope(&records, substeps, block::Q);

    let mut kappas: Vec<f64> = records
        .iter()
        .flat_map(|r| r.controls.iter().map(|c| c.kappa))
        .collect();
    let mut random: Vec<f64> = records
        .iter()
        .flat_map(|r| r.controls.iter().filter_map(|c| c.kappa_random))
        .collect();

    let runs: Vec<RunSummary> = outputs.iter().map(|o| o.summary.clone()).collect();
    let fold_max = |f: fn(&RunSummary) -> f64| runs.iter().map(f).fold(0.0, f64::max);
    let summary = EnsembleSummary {
        runs: n_runs,
        converged_count: runs.iter().filter(|r| r.converged).count(),
        failed_count: runs.iter().filter(|r| r.failure.is_some()).count(),
        thresholds: options.thresholds,
        max_terminal_position: fold_max(|r| r.metrics.terminal_position_norm),
        max_terminal_attitude: fold_max(|r| r.metrics.terminal_attitude_norm),
        max_thrust_n: fold_max(|r| r.metrics.max_thrust_n),
        median_kappa: median(&mut kappas),
        median_kappa_random: (!random.is_empty()).then(|| median(&mut random)),
        position_envelope,
        attitude_envelope,
    };
    let records = if options.keep_records {
        outputs.into_iter().map(|o| o.record).collect()
    } else {
        Vec::new()
    };
    Ok(Ensemble {
        runs,
        summary,
        records,
    })
}
