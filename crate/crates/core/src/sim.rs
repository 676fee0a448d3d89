//! Fixed-step closed-loop simulation: sampled controller on the nominal model,
//! RK4 on the truth model, zero-order hold in between.

use std::ops::{Add, Mul};

use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::allocation::Vector6;
use crate::attitude::{Quaternion, ReducedQuaternion};
use crate::controller::{ControllerConfig, MpcController, StabilityWitness};
use crate::dynamics::{
    is_spd, Disturbance, ModelOptions, PlantModel, RelativeState, SpacecraftParams,
    TargetAttitudeState, Vector12,
};
use crate::error::{Error, Result};
use crate::linalg::condition_number;
use crate::orbit::{propagate_target, OrbitElements, EARTH_RADIUS, MU_EARTH};
use crate::robpole::{random_selection, PoleSet};

/// RNG stream used for actuation disturbances.
const DISTURBANCE_STREAM: u64 = 0;
/// RNG stream used for the random-selection conditioning baseline.
const BASELINE_STREAM: u64 = 1;

/// One classical Runge–Kutta step of `ẋ = f(t, x)`.
pub fn rk4_step<S, F>(mut f: F, x: &S, t: f64, h: f64) -> Result<S>
where
    S: Clone + Add<Output = S> + Mul<f64, Output = S>,
    F: FnMut(f64, &S) -> Result<S>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidParameter {
            name: "step",
            reason: format!("{h} s must be positive"),
        });
    }
    let k1 = f(t, x)?;
    let k2 = f(t + 0.5 * h, &(x.clone() + k1.clone() * (0.5 * h)))?;
    let k3 = f(t + 0.5 * h, &(x.clone() + k2.clone() * (0.5 * h)))?;
    let k4 = f(t + h, &(x.clone() + k3.clone() * h))?;
    Ok(x.clone() + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Full-state RK4 step followed by projection of the quaternion part back
/// into the unit ball.
pub fn rk4_state_step<F>(f: F, x: &Vector12, t: f64, h: f64) -> Result<Vector12>
where
    F: FnMut(f64, &Vector12) -> Result<Vector12>,
{
    let next = rk4_step(f, x, t, h)?;
    Ok(RelativeState::from_vector(&next)?.to_vector())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub orbit: OrbitElements,
    pub initial_state: RelativeState,
    /// Target attitude at t = 0 and its constant body rate.
    pub target_motion: TargetAttitudeState,
    /// Parameters known to the controller.
    pub params: SpacecraftParams,
    /// Parameters of the simulated plant; `None` means the nominal ones.
    pub truth_params: Option<SpacecraftParams>,
    pub model: ModelOptions,
    pub controller: ControllerConfig,
    /// s
    pub duration: f64,
    /// s
    pub integrator_step: f64,
    /// Disturbance magnitude as a fraction of the commanded thrust norm.
    pub disturbance_fraction: f64,
    /// Per-thruster clip, N.
    pub thrust_limit: Option<f64>,
    /// Also evaluate κ(X) of a random admissible selection at every sample.
    pub kappa_baseline: bool,
    pub seed: u64,
}

/// Relative quaternion at the start of the reference docking approach.
pub const REFERENCE_QUATERNION: [f64; 4] = [0.3772, -0.4329, 0.6645, 0.4783];

/// Closed-loop poles of the reference approach, in the order they are listed.
pub const REFERENCE_POLES: [f64; 12] = [
    -0.1, -0.2, -0.15, -0.25, -0.3, -0.35, -0.4, -0.45, -0.5, -0.55, -0.6, -0.65,
];

impl ScenarioConfig {
    /// Docking approach on a circular 250 km orbit.
    pub fn reference() -> Self {
        let q = Quaternion::from_array(REFERENCE_QUATERNION)
            .normalized()
            .expect("nonzero quaternion");
        let initial_state = RelativeState {
            p: Vector3::new(10.0, -10.0, 10.0),
            r: Vector3::new(5.0, -4.0, 4.0),
            q: ReducedQuaternion::from_quaternion(&q).expect("unit quaternion"),
            w: Vector3::zeros(),
        };
        let poles = PoleSet::new(REFERENCE_POLES.to_vec()).expect("valid poles");
        Self {
            orbit: OrbitElements {
                semi_major_axis: EARTH_RADIUS + 250_000.0,
                eccentricity: 0.0,
                true_anomaly_0: 0.0,
                mu: MU_EARTH,
            },
            initial_state,
            target_motion: TargetAttitudeState::inertially_fixed(),
            params: SpacecraftParams::reference(),
            truth_params: None,
            model: ModelOptions::default(),
            controller: ControllerConfig::new(poles, 0.1),
            duration: 80.0,
            integrator_step: 0.01,
            disturbance_fraction: 0.0,
            thrust_limit: None,
            kappa_baseline: false,
            seed: 0,
        }
    }

    pub fn truth(&self) -> &SpacecraftParams {
        self.truth_params.as_ref().unwrap_or(&self.params)
    }

    /// Number of integrator steps per control sample.
    pub fn substeps(&self) -> Result<usize> {
        let ratio = self.controller.sample_period / self.integrator_step;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidParameter {
                name: "integrator_step",
                reason: format!(
                    "{} s must divide the sample period {} s",
                    self.integrator_step, self.controller.sample_period
                ),
            });
        }
        Ok(n as usize)
    }

    /// Number of control samples covering `duration`.
    pub fn samples(&self) -> usize {
        (self.duration / self.controller.sample_period).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::InvalidParameter {
                name: "duration",
                reason: format!("{} s must be positive", self.duration),
            });
        }
        if !(self.integrator_step > 0.0) || self.integrator_step > self.controller.sample_period {
            return Err(Error::InvalidParameter {
                name: "integrator_step",
                reason: format!(
                    "{} s must be positive and at most the sample period {} s",
                    self.integrator_step, self.controller.sample_period
                ),
            });
        }
        if !(self.disturbance_fraction >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "disturbance_fraction",
                reason: format!("{} must be non-negative", self.disturbance_fraction),
            });
        }
        if let Some(limit) = self.thrust_limit {
            if !(limit > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "thrust_limit",
                    reason: format!("{limit} N must be positive"),
                });
            }
        }
        self.controller.validate()?;
        self.orbit.validate()?;
        self.params.validate()?;
        self.truth().validate()?;
        self.substeps()?;
        Ok(())
    }
}

/// Bounds of the random modelling errors applied to the simulated plant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct PerturbationSpec {
    /// kg·m², on every entry of both inertia matrices
    pub inertia_entry_bound: f64,
    /// m, on each lever arm
    pub lever_arm_bound: f64,
    pub disturbance_fraction: f64,
}

impl PerturbationSpec {
    /// Bounds of the reference robustness study.
    pub fn reference() -> Self {
        Self {
            inertia_entry_bound: 1.0,
            lever_arm_bound: 0.01,
            disturbance_fraction: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("inertia_entry_bound", self.inertia_entry_bound),
            ("lever_arm_bound", self.lever_arm_bound),
            ("disturbance_fraction", self.disturbance_fraction),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{v} must be finite and non-negative"),
                });
            }
        }
        Ok(())
    }

    /// Draws a perturbed parameter set. Inertia draws that lose positive
    /// definiteness are redrawn.
    pub fn sample<R: Rng + ?Sized>(&self, nominal: &SpacecraftParams, rng: &mut R) -> Result<SpacecraftParams> {
        let mut out = *nominal;
        out.chaser_inertia = perturb_inertia(&nominal.chaser_inertia, self.inertia_entry_bound, rng)?;
        out.target_inertia = perturb_inertia(&nominal.target_inertia, self.inertia_entry_bound, rng)?;
        for l in &mut out.lever_arms {
            *l += symmetric(rng, self.lever_arm_bound);
        }
        out.validate()?;
        Ok(out)
    }
}

fn symmetric<R: Rng + ?Sized>(rng: &mut R, bound: f64) -> f64 {
    if bound == 0.0 {
        0.0
    } else {
        rng.random_range(-bound..=bound)
    }
}

fn perturb_inertia<R: Rng + ?Sized>(j: &Matrix3<f64>, bound: f64, rng: &mut R) -> Result<Matrix3<f64>> {
    for _ in 0..1000 {
        let mut out = *j;
        for r in 0..3 {
            for c in r..3 {
                let d = symmetric(rng, bound);
                out[(r, c)] += d;
                if r != c {
                    out[(c, r)] += d;
                }
            }
        }
        if is_spd(&out) {
            return Ok(out);
        }
    }
    Err(Error::InvalidParameter {
        name: "inertia_entry_bound",
        reason: format!("{bound} kg·m² keeps producing indefinite inertia"),
    })
}

/// Uniformly oriented disturbance with magnitude uniform in `[0, fraction·‖f_a‖]`.
pub fn draw_disturbance<R: Rng + ?Sized>(f_a: &Vector6, fraction: f64, rng: &mut R) -> Vector6 {
    let scale = fraction * f_a.norm();
    if scale == 0.0 {
        return Vector6::zeros();
    }
    let dir = loop {
        let v = Vector6::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            break v / n;
        }
    };
    dir * (scale * rng.random::<f64>())
}

/// One row per integrator step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: Vector12,
    /// Commanded thrust held over this step, N.
    pub f_a: Vector6,
    pub max_re_eig: f64,
    pub det_x: f64,
    pub kappa: f64,
}

/// Diagnostics of one controller sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlSample {
    pub t: f64,
    pub eigenvalue_error: f64,
    pub residual: f64,
    pub kappa: f64,
    /// κ of a random admissible selection on the same plant.
    pub kappa_random: Option<f64>,
    pub closed_loop_norm: f64,
    pub max_re_eig: f64,
    pub sweeps: usize,
    pub held: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub samples: Vec<TrajectorySample>,
    pub controls: Vec<ControlSample>,
    pub witness: StabilityWitness,
    /// Set when the run stopped early.
    pub failure: Option<String>,
}

impl TrajectoryRecord {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    pub fn final_state(&self) -> Option<&Vector12> {
        self.samples.last().map(|s| &s.x)
    }
}

/// Simulates the sampled closed loop. Errors in the middle of a run end it
/// with a partial record; only an invalid configuration is an `Err`.
pub fn run_closed_loop(cfg: &ScenarioConfig) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let nominal = PlantModel::new(cfg.params, cfg.orbit.mu, cfg.model)?;
    let truth = PlantModel::new(*cfg.truth(), cfg.orbit.mu, cfg.model)?;
    let mut controller = MpcController::new(nominal, cfg.controller.clone())?;

    let substeps = cfg.substeps()?;
    let n_samples = cfg.samples();
    let ts = cfg.controller.sample_period;
    let h = cfg.integrator_step;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(DISTURBANCE_STREAM);
    let mut baseline_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    baseline_rng.set_stream(BASELINE_STREAM);

    let mut record = TrajectoryRecord {
        samples: Vec::with_capacity(n_samples * substeps + 1),
        controls: Vec::with_capacity(n_samples + 1),
        witness: StabilityWitness::default(),
        failure: None,
    };
    let mut x = cfg.initial_state.to_vector();
    let no_disturbance = Disturbance::default();

    for k in 0..=n_samples {
        let t0 = k as f64 * ts;
        let step = sample_step(cfg, &mut controller, &x, t0, &mut baseline_rng);
        let (cmd_row, command) = match step {
            Ok(v) => v,
            Err(e) => {
                record.failure = Some(format!("controller at t = {t0} s: {e}"));
                break;
            }
        };
        record.witness.record(&command.stability);
        record.controls.push(cmd_row);

        let row = |t: f64, x: &Vector12| TrajectorySample {
            t,
            x: *x,
            f_a: command.f_a,
            max_re_eig: command.stability.max_real,
            det_x: command.gain.det_x,
            kappa: command.gain.kappa,
        };
        if k == n_samples {
            record.samples.push(row(t0, &x));
            break;
        }

        let mut applied = command.f_a;
        if let Some(limit) = cfg.thrust_limit {
            applied = applied.map(|f| f.clamp(-limit, limit));
        }
        applied += draw_disturbance(&command.f_a, cfg.disturbance_fraction, &mut rng);

        for j in 0..substeps {
            let t = t0 + j as f64 * h;
            record.samples.push(row(t, &x));
            let deriv = |ti: f64, xi: &Vector12| {
                let orbit = propagate_target(&cfg.orbit, ti)?;
                truth.derivative(xi, &applied, &no_disturbance, &orbit, &cfg.target_motion.at(ti))
            };
            match rk4_state_step(deriv, &x, t, h) {
                Ok(next) if next.iter().all(|v| v.is_finite()) => x = next,
                Ok(_) => {
                    record.failure = Some(format!("non-finite state at t = {t} s"));
                    break;
                }
                Err(e) => {
                    record.failure = Some(format!("integrator at t = {t} s: {e}"));
                    break;
                }
            }
        }
        if record.failure.is_some() {
            break;
        }
    }
    Ok(record)
}

fn sample_step(
    cfg: &ScenarioConfig,
    controller: &mut MpcController,
    x: &Vector12,
    t: f64,
    baseline_rng: &mut ChaCha8Rng,
) -> Result<(ControlSample, crate::controller::ControlCommand)> {
    let state = RelativeState::from_vector(x)?;
    let orbit = propagate_target(&cfg.orbit, t)?;
    let target = cfg.target_motion.at(t);
    let command = controller.step(&state, &orbit, &target)?;
    let kappa_random = if cfg.kappa_baseline {
        Some(random_kappa(controller, &state, &orbit, &target, baseline_rng)?)
    } else {
        None
    };
    let row = ControlSample {
        t,
        eigenvalue_error: command.eigenvalue_error,
        residual: command.gain.residual,
        kappa: command.gain.kappa,
        kappa_random,
        closed_loop_norm: command.stability.norm,
        max_re_eig: command.stability.max_real,
        sweeps: command.gain.sweeps(),
        held: command.held,
    };
    Ok((row, command))
}

fn random_kappa(
    controller: &MpcController,
    state: &RelativeState,
    orbit: &crate::orbit::OrbitState,
    target: &TargetAttitudeState,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let a: DMatrix<f64> = controller.state_matrix(state, orbit, target)?;
    let subspaces = controller.assigner().subspaces(&a, &controller.config().poles)?;
    Ok(condition_number(&random_selection(&subspaces, rng)))
}
