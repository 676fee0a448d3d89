//! Per-sample re-synthesis controller: feedforward cancellation of the model
//! offsets plus robust pole-assignment feedback on the freshly linearized plant.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::allocation::Vector6;
use crate::dynamics::{PlantModel, RelativeState, TargetAttitudeState, Vector12, STATE_DIM};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, spectral_norm};
use crate::orbit::OrbitState;
use crate::robpole::{GainResult, PoleSet, RobustPoleAssigner, SelectionOptions};

/// Slack allowed on assigned eigenvalues.
pub const EIGENVALUE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControllerConfig {
    pub poles: PoleSet,
    /// s
    pub sample_period: f64,
    /// Keep the first gain instead of re-synthesizing every sample.
    pub pole_hold: bool,
    pub selection: SelectionOptions,
}

impl ControllerConfig {
    pub fn new(poles: PoleSet, sample_period: f64) -> Self {
        Self {
            poles,
            sample_period,
            pole_hold: false,
            selection: SelectionOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_period > 0.0) || !self.sample_period.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sample_period",
                reason: format!("{} s must be positive", self.sample_period),
            });
        }
        if self.poles.len() != STATE_DIM {
            return Err(Error::InvalidPoles(format!(
                "need {STATE_DIM} poles, got {}",
                self.poles.len()
            )));
        }
        Ok(())
    }
}

/// Pointwise eigenvalue summary of a closed-loop matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub max_real: f64,
    /// Induced 2-norm.
    pub norm: f64,
    pub passed: bool,
}

/// Checks `max Re λ(A_cl) ≤ −mu_margin` (with [`EIGENVALUE_TOL`] slack).
pub fn pointwise_stability_check(a_closed: &DMatrix<f64>, mu_margin: f64) -> StabilityReport {
    let max_real = eigenvalues(a_closed)
        .iter()
        .map(|e| e.re)
        .fold(f64::NEG_INFINITY, f64::max);
    StabilityReport {
        max_real,
        norm: spectral_norm(a_closed),
        passed: max_real <= -mu_margin + EIGENVALUE_TOL,
    }
}

/// Running supremum of the pointwise stability quantities over a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityWitness {
    pub max_real: f64,
    pub sup_norm: f64,
    pub all_passed: bool,
    pub samples: usize,
}

impl Default for StabilityWitness {
    fn default() -> Self {
        Self {
            max_real: f64::NEG_INFINITY,
            sup_norm: 0.0,
            all_passed: true,
            samples: 0,
        }
    }
}

impl StabilityWitness {
    pub fn record(&mut self, report: &StabilityReport) {
        self.max_real = self.max_real.max(report.max_real);
        self.sup_norm = self.sup_norm.max(report.norm);
        self.all_passed &= report.passed;
        self.samples += 1;
    }
}

#[derive(Debug, Clone)]
pub struct ControlCommand {
    /// Thruster forces, N. Always `u1 + u2`.
    pub f_a: Vector6,
    pub u1: Vector6,
    pub u2: Vector6,
    pub gain: GainResult,
    /// `A(t) + B K` for the plant this command was computed on.
    pub closed_loop: DMatrix<f64>,
    pub stability: StabilityReport,
    /// Largest distance between the closed-loop spectrum and the requested poles.
    pub eigenvalue_error: f64,
    /// True when the gain was reused from an earlier sample (pole hold or a
    /// synthesis failure).
    pub held: bool,
}

/// One controller instance per simulation run.
#[derive(Debug, Clone)]
pub struct MpcController {
    model: PlantModel,
    assigner: RobustPoleAssigner,
    config: ControllerConfig,
    last_gain: Option<GainResult>,
}

fn to_dmatrix<const R: usize, const C: usize>(m: &nalgebra::SMatrix<f64, R, C>) -> DMatrix<f64> {
    DMatrix::from_column_slice(R, C, m.as_slice())
}

impl MpcController {
    pub fn new(model: PlantModel, config: ControllerConfig) -> Result<Self> {
        config.validate()?;
        // B is constant, so its factorization is done once here
        let assigner = RobustPoleAssigner::new(to_dmatrix(model.b()), config.selection)?;
        Ok(Self {
            model,
            assigner,
            config,
            last_gain: None,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn model(&self) -> &PlantModel {
        &self.model
    }

    pub fn assigner(&self) -> &RobustPoleAssigner {
        &self.assigner
    }

    /// Linearized state matrix at the measured state, as a dynamic matrix.
    pub fn state_matrix(
        &self,
        state: &RelativeState,
        orbit: &OrbitState,
        target: &TargetAttitudeState,
    ) -> Result<DMatrix<f64>> {
        let orbit = orbit.with_chaser(&state.p);
        Ok(to_dmatrix(&self.model.assemble(state, &orbit, target)?.a))
    }

    /// Computes `f_a = G†n + K x` for the measured state.
    ///
    /// A synthesis failure falls back to the previous gain when one exists.
    pub fn step(
        &mut self,
        state: &RelativeState,
        orbit: &OrbitState,
        target: &TargetAttitudeState,
    ) -> Result<ControlCommand> {
        let orbit = orbit.with_chaser(&state.p);
        let plant = self.model.assemble(state, &orbit, target)?;
        let (n_t, n_r) = self.model.offsets(state, &orbit, target)?;
        let u1 = self.model.alloc.feedforward(&n_t, &n_r);

        let a = to_dmatrix(&plant.a);
        let (gain, held) = match (&self.last_gain, self.config.pole_hold) {
            (Some(g), true) => (g.clone(), true),
            (previous, _) => match self.assigner.assign(&a, &self.config.poles) {
                Ok(g) => (g, false),
                Err(e) => match previous {
                    Some(g) => (g.clone(), true),
                    None => return Err(e),
                },
            },
        };

        let x: Vector12 = state.to_vector();
        let xd = nalgebra::DVector::from_column_slice(x.as_slice());
        let u2_dyn = &gain.k * xd;
        let u2 = Vector6::from_column_slice(u2_dyn.as_slice());

        let closed_loop = &a + self.assigner.b() * &gain.k;
        let eig = eigenvalues(&closed_loop);
        let max_real = eig.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
        let stability = StabilityReport {
            max_real,
            norm: spectral_norm(&closed_loop),
            passed: max_real <= self.config.poles.slowest() + EIGENVALUE_TOL,
        };
        let eigenvalue_error = crate::linalg::eigenvalue_error(&closed_loop, self.config.poles.as_slice());

        self.last_gain = Some(gain.clone());
        Ok(ControlCommand {
            f_a: u1 + u2,
            u1,
            u2,
            gain,
            closed_loop,
            stability,
            eigenvalue_error,
            held,
        })
    }
}

/// Stateless form of [`MpcController::step`].
pub fn controller_step(
    state: &RelativeState,
    orbit: &OrbitState,
    target: &TargetAttitudeState,
    model: &PlantModel,
    config: &ControllerConfig,
) -> Result<ControlCommand> {
    MpcController::new(model.clone(), config.clone())?.step(state, orbit, target)
}
