//! Scenario and perturbation files.
//!
//! Both are TOML with one table per section. Every key is optional and falls
//! back to the reference scenario; all quantities are SI.
//!
//! ```toml
//! [orbit]
//! semi_major_axis = 6621000.0     # m
//! eccentricity = 0.0
//! true_anomaly_0 = 0.0            # rad
//! mu = 3.986004418e14             # m^3/s^2
//!
//! [chaser]
//! mass = 10.0                     # kg
//! inertia = [[10.0, 0.0, 0.0], [0.0, 10.0, 0.0], [0.0, 0.0, 10.0]]  # kg m^2
//! lever_arms = [2.0, 2.0, 2.0]    # m
//!
//! [target]
//! inertia = [[10.0, 2.5, 3.5], [2.5, 10.0, 4.5], [3.5, 4.5, 10.0]]  # kg m^2
//! quaternion = [1.0, 0.0, 0.0, 0.0]  # scalar first
//! angular_rate = [0.0, 0.0, 0.0]     # rad/s, body frame
//!
//! [initial]
//! position = [10.0, -10.0, 10.0]  # m
//! velocity = [5.0, -4.0, 4.0]     # m/s
//! quaternion = [0.3772, -0.4329, 0.6645, 0.4783]  # normalized on load
//! angular_rate = [0.0, 0.0, 0.0]  # rad/s
//!
//! [controller]
//! poles = [-0.1, -0.2, -0.15, -0.25, -0.3, -0.35, -0.4, -0.45, -0.5, -0.55, -0.6, -0.65]  # 1/s
//! sample_period = 0.1             # s
//! pole_hold = false
//! max_sweeps = 10
//! sweep_tolerance = 1e-6
//!
//! [model]
//! verbatim_stiffness = false
//!
//! [simulation]
//! duration = 80.0                 # s
//! step = 0.01                     # s
//! disturbance_fraction = 0.0
//! thrust_limit = 100.0            # N, optional
//! seed = 0
//!
//! [metrics]
//! position_band = 0.05            # m
//! attitude_band = 0.01
//! crossing_deadband = 1e-3
//! ```
//!
//! A perturbation file holds a single `[perturbation]` table with
//! `inertia_entry_bound` (kg m^2), `lever_arm_bound` (m) and
//! `disturbance_fraction`.

use std::ops::Range;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::attitude::{Quaternion, ReducedQuaternion};
use crate::controller::ControllerConfig;
use crate::dynamics::{ModelOptions, RelativeState, SpacecraftParams, TargetAttitudeState};
use crate::metrics::MetricOptions;
use crate::orbit::OrbitElements;
use crate::robpole::{PoleSet, SelectionOptions};
use crate::sim::{PerturbationSpec, ScenarioConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}line {line}: {message}", field.as_ref().map(|f| format!("`{f}`, ")).unwrap_or_default())]
    Parse {
        field: Option<String>,
        line: usize,
        message: String,
    },
    #[error("`{field}`{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Invalid {
        field: String,
        line: Option<usize>,
        message: String,
    },
}

impl ConfigError {
    pub fn field(&self) -> Option<&str> {
        match self {
            Self::Io { .. } => None,
            Self::Parse { field, .. } => field.as_deref(),
            Self::Invalid { field, .. } => Some(field),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OrbitSection {
    semi_major_axis: f64,
    eccentricity: f64,
    true_anomaly_0: f64,
    mu: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ChaserSection {
    mass: f64,
    inertia: [[f64; 3]; 3],
    lever_arms: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TargetSection {
    inertia: [[f64; 3]; 3],
    quaternion: [f64; 4],
    angular_rate: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct InitialSection {
    position: [f64; 3],
    velocity: [f64; 3],
    quaternion: [f64; 4],
    angular_rate: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ControllerSection {
    poles: Vec<f64>,
    sample_period: f64,
    pole_hold: bool,
    max_sweeps: usize,
    sweep_tolerance: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ModelSection {
    verbatim_stiffness: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimulationSection {
    duration: f64,
    step: f64,
    disturbance_fraction: f64,
    thrust_limit: Option<f64>,
    seed: u64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScenarioFile {
    orbit: OrbitSection,
    chaser: ChaserSection,
    target: TargetSection,
    initial: InitialSection,
    controller: ControllerSection,
    model: ModelSection,
    simulation: SimulationSection,
    metrics: MetricOptions,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PerturbationFile {
    perturbation: PerturbationSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PerturbationSection {
    inertia_entry_bound: f64,
    lever_arm_bound: f64,
    disturbance_fraction: f64,
}

fn rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|r| [0, 1, 2].map(|c| m[(r, c)]))
}

fn from_rows(r: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| r[i][j])
}

impl Default for OrbitSection {
    fn default() -> Self {
        let o = ScenarioConfig::reference().orbit;
        Self {
            semi_major_axis: o.semi_major_axis,
            eccentricity: o.eccentricity,
            true_anomaly_0: o.true_anomaly_0,
            mu: o.mu,
        }
    }
}

impl Default for ChaserSection {
    fn default() -> Self {
        let p = SpacecraftParams::reference();
        Self {
            mass: p.chaser_mass,
            inertia: rows(&p.chaser_inertia),
            lever_arms: p.lever_arms,
        }
    }
}

impl Default for TargetSection {
    fn default() -> Self {
        Self {
            inertia: rows(&SpacecraftParams::reference().target_inertia),
            quaternion: [1.0, 0.0, 0.0, 0.0],
            angular_rate: [0.0; 3],
        }
    }
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            position: [10.0, -10.0, 10.0],
            velocity: [5.0, -4.0, 4.0],
            quaternion: crate::sim::REFERENCE_QUATERNION,
            angular_rate: [0.0; 3],
        }
    }
}

impl Default for ControllerSection {
    fn default() -> Self {
        let s = SelectionOptions::default();
        Self {
            poles: crate::sim::REFERENCE_POLES.to_vec(),
            sample_period: 0.1,
            pole_hold: false,
            max_sweeps: s.max_sweeps,
            sweep_tolerance: s.tolerance,
        }
    }
}

impl Default for SimulationSection {
    fn default() -> Self {
        let cfg = ScenarioConfig::reference();
        Self {
            duration: cfg.duration,
            step: cfg.integrator_step,
            disturbance_fraction: cfg.disturbance_fraction,
            thrust_limit: cfg.thrust_limit,
            seed: cfg.seed,
        }
    }
}

/// A scenario file after parsing, with the metric settings that travel with it.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScenario {
    pub scenario: ScenarioConfig,
    pub metrics: MetricOptions,
}

/// 1-based line of a byte offset.
fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

/// Line on which `section.key` is assigned, if present.
fn line_of_key(source: &str, dotted: &str) -> Option<usize> {
    let (section, key) = dotted.split_once('.')?;
    let mut current = "";
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim();
        } else if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

/// Dotted key of the innermost table entry containing `span`.
fn key_at(source: &str, span: &Range<usize>) -> Option<String> {
    let line = line_of(source, span.start);
    let mut section = String::new();
    let mut key = None;
    for (i, raw) in source.lines().enumerate() {
        if i + 1 > line {
            break;
        }
        let l = raw.trim();
        if let Some(name) = l.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            key = None;
        } else if let Some((k, _)) = l.split_once('=') {
            key = Some(k.trim().to_string());
        }
    }
    match key {
        Some(k) if !section.is_empty() => Some(format!("{section}.{k}")),
        Some(k) => Some(k),
        None if !section.is_empty() => Some(section),
        None => None,
    }
}

fn parse_toml<'de, T: Deserialize<'de>>(source: &'de str) -> Result<T, ConfigError> {
    toml::from_str(source).map_err(|e| {
        let span = e.span().unwrap_or(0..0);
        ConfigError::Parse {
            field: key_at(source, &span),
            line: line_of(source, span.start),
            message: e.message().trim().to_string(),
        }
    })
}

/// Maps a library parameter name onto the file key that sets it.
fn dotted_name(name: &str) -> &str {
    match name {
        "duration" => "simulation.duration",
        "integrator_step" | "step" => "simulation.step",
        "disturbance_fraction" => "simulation.disturbance_fraction",
        "thrust_limit" => "simulation.thrust_limit",
        "sample_period" => "controller.sample_period",
        "semi_major_axis" => "orbit.semi_major_axis",
        "eccentricity" => "orbit.eccentricity",
        "mu" => "orbit.mu",
        "chaser_mass" => "chaser.mass",
        "chaser_inertia" => "chaser.inertia",
        "target_inertia" => "target.inertia",
        "L1" | "L2" | "L3" => "chaser.lever_arms",
        "inertia_entry_bound" => "perturbation.inertia_entry_bound",
        "lever_arm_bound" => "perturbation.lever_arm_bound",
        other => other,
    }
}

fn invalid(source: &str, field: &str, message: String) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        line: line_of_key(source, field),
        message,
    }
}

fn library_error(source: &str, err: crate::Error) -> ConfigError {
    match err {
        crate::Error::InvalidParameter { name, reason } => invalid(source, dotted_name(name), reason),
        crate::Error::InvalidPoles(msg) => invalid(source, "controller.poles", msg),
        crate::Error::SingularAttitude { .. } => invalid(source, "initial.quaternion", err.to_string()),
        other => invalid(source, "scenario", other.to_string()),
    }
}

/// Parses and validates a scenario from TOML text.
pub fn parse_scenario(source: &str) -> Result<LoadedScenario, ConfigError> {
    let file: ScenarioFile = parse_toml(source)?;
    let err = |e| library_error(source, e);

    let poles = PoleSet::new(file.controller.poles.clone()).map_err(err)?;
    let mut controller = ControllerConfig::new(poles, file.controller.sample_period);
    controller.pole_hold = file.controller.pole_hold;
    controller.selection = SelectionOptions {
        max_sweeps: file.controller.max_sweeps,
        tolerance: file.controller.sweep_tolerance,
    };

    let q = Quaternion::from_array(file.initial.quaternion).normalized().map_err(err)?;
    let q_t = Quaternion::from_array(file.target.quaternion)
        .normalized()
        .map_err(|e| invalid(source, "target.quaternion", e.to_string()))?;
    let initial_state = RelativeState {
        p: Vector3::from(file.initial.position),
        r: Vector3::from(file.initial.velocity),
        q: ReducedQuaternion::from_quaternion(&q).map_err(err)?,
        w: Vector3::from(file.initial.angular_rate),
    };

    let scenario = ScenarioConfig {
        orbit: OrbitElements {
            semi_major_axis: file.orbit.semi_major_axis,
            eccentricity: file.orbit.eccentricity,
            true_anomaly_0: file.orbit.true_anomaly_0,
            mu: file.orbit.mu,
        },
        initial_state,
        target_motion: TargetAttitudeState {
            q_i_tb: q_t,
            w_tb: Vector3::from(file.target.angular_rate),
        },
        params: SpacecraftParams {
            chaser_mass: file.chaser.mass,
            chaser_inertia: from_rows(&file.chaser.inertia),
            target_inertia: from_rows(&file.target.inertia),
            lever_arms: file.chaser.lever_arms,
        },
        truth_params: None,
        model: ModelOptions {
            verbatim_stiffness: file.model.verbatim_stiffness,
        },
        controller,
        duration: file.simulation.duration,
        integrator_step: file.simulation.step,
        disturbance_fraction: file.simulation.disturbance_fraction,
        thrust_limit: file.simulation.thrust_limit,
        kappa_baseline: false,
        seed: file.simulation.seed,
    };
    scenario.validate().map_err(err)?;

    let m = file.metrics;
    for (field, v) in [
        ("metrics.position_band", m.position_band),
        ("metrics.attitude_band", m.attitude_band),
        ("metrics.crossing_deadband", m.crossing_deadband),
    ] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(invalid(source, field, format!("{v} must be finite and non-negative")));
        }
    }
    Ok(LoadedScenario {
        scenario,
        metrics: file.metrics,
    })
}

/// Validates a scenario assembled or adjusted outside a file.
pub fn check_scenario(scenario: &ScenarioConfig) -> Result<(), ConfigError> {
    scenario.validate().map_err(|e| library_error("", e))
}

pub fn parse_perturbation(source: &str) -> Result<PerturbationSpec, ConfigError> {
    let file: PerturbationFile = parse_toml(source)?;
    let p = file.perturbation;
    let spec = PerturbationSpec {
        inertia_entry_bound: p.inertia_entry_bound,
        lever_arm_bound: p.lever_arm_bound,
        disturbance_fraction: p.disturbance_fraction,
    };
    spec.validate().map_err(|e| match e {
        crate::Error::InvalidParameter { name, reason } => {
            invalid(source, &format!("perturbation.{name}"), reason)
        }
        other => invalid(source, "perturbation", other.to_string()),
    })?;
    Ok(spec)
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_scenario(path: &Path) -> Result<LoadedScenario, ConfigError> {
    parse_scenario(&read(path)?)
}

pub fn load_perturbation(path: &Path) -> Result<PerturbationSpec, ConfigError> {
    parse_perturbation(&read(path)?)
}

/// SHA-256 of the canonical JSON form of a resolved configuration.
pub fn digest<T: serde::Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("configuration serializes");
    hex::encode(Sha256::digest(&json))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_reference_scenario() {
        let loaded = parse_scenario("").unwrap();
        assert_eq!(loaded.scenario, ScenarioConfig::reference());
        assert_eq!(loaded.metrics, MetricOptions::default());
    }

    #[test]
    fn zero_duration_names_field_and_line() {
        let src = "[orbit]\neccentricity = 0.0\n\n[simulation]\nduration = 0.0\n";
        let e = parse_scenario(src).unwrap_err();
        assert_eq!(e.field(), Some("simulation.duration"));
        match e {
            ConfigError::Invalid { line, .. } => assert_eq!(line, Some(5)),
            other => panic!("{other:?}"),
        }
        assert!(e_to_string(src).contains("simulation.duration"));
    }

    fn e_to_string(src: &str) -> String {
        parse_scenario(src).unwrap_err().to_string()
    }

    #[test]
    fn type_error_reports_field_and_line() {
        let src = "[simulation]\nstep = 0.01\nduration = \"long\"\n";
        match parse_scenario(src).unwrap_err() {
            ConfigError::Parse { field, line, .. } => {
                assert_eq!(field.as_deref(), Some("simulation.duration"));
                assert_eq!(line, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let e = parse_scenario("[simulation]\ndurration = 80.0\n").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 2, .. }), "{e}");
    }

    #[test]
    fn invalid_poles_named() {
        let e = parse_scenario("[controller]\npoles = [-0.1, 0.2]\n").unwrap_err();
        assert_eq!(e.field(), Some("controller.poles"));
    }

    #[test]
    fn quaternion_is_normalized() {
        let loaded = parse_scenario("[initial]\nquaternion = [2.0, 0.0, 0.0, 0.0]\n").unwrap();
        assert_eq!(loaded.scenario.initial_state.q, ReducedQuaternion::identity());
    }

    #[test]
    fn perturbation_file() {
        let spec = parse_perturbation(
            "[perturbation]\ninertia_entry_bound = 1.0\nlever_arm_bound = 0.01\ndisturbance_fraction = 0.1\n",
        )
        .unwrap();
        assert_eq!(spec, PerturbationSpec::reference());
        let e = parse_perturbation("[perturbation]\nlever_arm_bound = -1.0\n").unwrap_err();
        assert_eq!(e.field(), Some("perturbation.lever_arm_bound"));
    }

    #[test]
    fn digest_tracks_every_field() {
        let base = ScenarioConfig::reference();
        let d0 = digest(&base);
        assert_eq!(d0, digest(&base.clone()));
        assert_eq!(d0.len(), 64);
        let mut changed = base.clone();
        changed.seed = 1;
        assert_ne!(d0, digest(&changed));
        let mut changed = base.clone();
        changed.model.verbatim_stiffness = true;
        assert_ne!(d0, digest(&changed));
        let mut changed = base;
        changed.params.target_inertia[(0, 1)] += 1e-12;
        changed.params.target_inertia[(1, 0)] += 1e-12;
        assert_ne!(d0, digest(&changed));
    }
}
