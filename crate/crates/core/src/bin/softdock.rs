//! Batch front end: `run`, `montecarlo` and `verify`.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 simulation
//! failure, 3 verification failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use softdock::config::{self, ConfigError, LoadedScenario};
use softdock::metrics::compute_metrics;
use softdock::montecarlo::{monte_carlo, MonteCarloOptions};
use softdock::output::{self, RunManifest};
use softdock::sim::run_closed_loop;
use softdock::verify::{self, Level};

const EXIT_CONFIG: u8 = 1;
const EXIT_SIMULATION: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(name = "softdock", version, about = "Rendezvous and soft-docking simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write trajectory.csv, metrics.json, manifest.json.
    Run {
        #[command(flatten)]
        common: Common,
        /// Seed for the disturbance generator; overrides the file.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write position.svg, attitude.svg and forces.svg.
        #[arg(long)]
        plots: bool,
    },
    /// Simulate an ensemble of perturbed plants.
    Montecarlo {
        #[command(flatten)]
        common: Common,
        /// Perturbation bounds file.
        #[arg(long)]
        perturb: PathBuf,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip the random-selection conditioning baseline.
        #[arg(long)]
        no_kappa_baseline: bool,
    },
    /// Run the invariant suites and print a pass/fail table.
    Verify {
        #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Append a check that always fails.
        #[arg(long, hide = true)]
        inject_failure: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Use the stiffness term exactly as printed in the original model.
    #[arg(long)]
    verbatim_stiffness: bool,
    /// Controller sample period, s.
    #[arg(long)]
    sample_period: Option<f64>,
    /// Integrator step, s.
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

enum Failure {
    Config(String),
    Simulation(String),
    Verify,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Simulation(format!("writing {}: {e}", path.display()))
}

fn load(common: &Common) -> Result<LoadedScenario, Failure> {
    let mut loaded = config::load_scenario(&common.config)?;
    let s = &mut loaded.scenario;
    if common.verbatim_stiffness {
        s.model.verbatim_stiffness = true;
    }
    if let Some(ts) = common.sample_period {
        s.controller.sample_period = ts;
    }
    if let Some(h) = common.step {
        s.integrator_step = h;
    }
    config::check_scenario(s)?;
    Ok(loaded)
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

fn write_json<T: Serialize>(path: PathBuf, value: &T, manifest: &mut RunManifest) -> Result<(), Failure> {
    output::write_json(&path, value).map_err(|e| io_failure(&path, e))?;
    manifest.outputs.push(path);
    Ok(())
}

fn write_text(path: PathBuf, text: &str, manifest: &mut RunManifest) -> Result<(), Failure> {
    output::write_file(&path, text).map_err(|e| io_failure(&path, e))?;
    manifest.outputs.push(path);
    Ok(())
}

fn cmd_run(common: &Common, seed: Option<u64>, plots: bool) -> Result<(), Failure> {
    let start = Instant::now();
    let mut loaded = load(common)?;
    if let Some(seed) = seed {
        loaded.scenario.seed = seed;
    }
    let scenario = &loaded.scenario;
    prepare_out(&common.out)?;

    let record = run_closed_loop(scenario).map_err(|e| Failure::Simulation(e.to_string()))?;
    let metrics = compute_metrics(&record, &loaded.metrics);

    let mut manifest = RunManifest::new("run", config::digest(scenario), scenario.seed);
    write_text(common.out.join("trajectory.csv"), &output::trajectory_csv(&record), &mut manifest)?;
    write_json(common.out.join("metrics.json"), &metrics, &mut manifest)?;
    if plots {
        let files = output::write_plots(&record, &common.out).map_err(|e| io_failure(&common.out, e))?;
        manifest.outputs.extend(files);
    }
    manifest.failed = record.failed();
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    let path = common.out.join("manifest.json");
    manifest.outputs.push(path.clone());
    output::write_json(&path, &manifest).map_err(|e| io_failure(&path, e))?;

    println!(
        "max thrust {:.3} N, terminal |p| {:.3e} m, terminal |qv| {:.3e}",
        metrics.max_thrust_n, metrics.terminal_position_norm, metrics.terminal_attitude_norm
    );
    match &record.failure {
        Some(f) => Err(Failure::Simulation(f.clone())),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct EnsembleConfig<'a> {
    scenario: &'a softdock::sim::ScenarioConfig,
    perturbation: &'a softdock::sim::PerturbationSpec,
    runs: usize,
    seed: u64,
    kappa_baseline: bool,
}

fn cmd_montecarlo(common: &Common, perturb: &Path, runs: usize, seed: u64, baseline: bool) -> Result<(), Failure> {
    let start = Instant::now();
    if runs == 0 {
        return Err(Failure::Config("`--runs` must be at least 1".into()));
    }
    let loaded = load(common)?;
    let spec = config::load_perturbation(perturb)?;
    prepare_out(&common.out)?;

    let options = MonteCarloOptions {
        metrics: loaded.metrics,
        kappa_baseline: baseline,
        ..Default::default()
    };
    let ensemble = monte_carlo(&loaded.scenario, &spec, runs, seed, &options)
        .map_err(|e| Failure::Simulation(e.to_string()))?;

    let digest = config::digest(&EnsembleConfig {
        scenario: &loaded.scenario,
        perturbation: &spec,
        runs,
        seed,
        kappa_baseline: baseline,
    });
    let mut manifest = RunManifest::new("montecarlo", digest, seed);
    write_text(common.out.join("runs.csv"), &output::runs_csv(&ensemble.runs), &mut manifest)?;
    write_json(common.out.join("summary.json"), &ensemble.summary, &mut manifest)?;
    write_json(common.out.join("metrics.json"), &ensemble.runs, &mut manifest)?;
    let s = &ensemble.summary;
    manifest.failed = s.failed_count > 0;
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    let path = common.out.join("manifest.json");
    manifest.outputs.push(path.clone());
    output::write_json(&path, &manifest).map_err(|e| io_failure(&path, e))?;

    println!(
        "converged {}/{}, failed {}, worst terminal |p| {:.3e} m, median kappa {:.3}",
        s.converged_count, s.runs, s.failed_count, s.max_terminal_position, s.median_kappa
    );
    if s.failed_count > 0 {
        return Err(Failure::Simulation(format!("{} runs failed", s.failed_count)));
    }
    Ok(())
}

fn cmd_verify(level: LevelArg, seed: u64, inject: bool) -> Result<(), Failure> {
    let level = match level {
        LevelArg::Quick => Level::Quick,
        LevelArg::Full => Level::Full,
    };
    let mut checks = verify::standard_checks();
    if inject {
        checks.push(verify::injected_failure());
    }
    let report = verify::run_checks(&checks, level, seed);
    print!("{}", report.table());
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Run { common, seed, plots } => cmd_run(common, *seed, *plots),
        Command::Montecarlo {
            common,
            perturb,
            runs,
            seed,
            no_kappa_baseline,
        } => cmd_montecarlo(common, perturb, *runs, *seed, !no_kappa_baseline),
        Command::Verify {
            level,
            seed,
            inject_failure,
        } => cmd_verify(*level, *seed, *inject_failure),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Simulation(msg)) => {
            eprintln!("simulation failed: {msg}");
            ExitCode::from(EXIT_SIMULATION)
        }
        Err(Failure::Verify) => {
            eprintln!("verification failed");
            ExitCode::from(EXIT_VERIFY)
        }
    }
}
