//! Self-check suites over the library's invariants, runnable outside the test
//! harness.

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::{DMatrix, Matrix2, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::allocation::AllocationConfig;
use crate::attitude::{kinematics_matrix, quat_inverse, quat_multiply, relative_quaternion, skew, Quaternion};
use crate::controller::{ControllerConfig, MpcController};
use crate::dynamics::{PlantModel, RelativeState, SpacecraftParams, TargetAttitudeState};
use crate::linalg::eigenvalue_error;
use crate::orbit::{propagate_target, solve_kepler};
use crate::robpole::{PoleSet, RobustPoleAssigner, SelectionOptions};
use crate::sim::{rk4_step, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    /// Random cases per randomized check.
    pub fn cases(self) -> usize {
        match self {
            Level::Quick => 100,
            Level::Full => 1000,
        }
    }
}

/// Largest observed error and the bound it must stay under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub worst: f64,
    pub bound: f64,
}

impl Measurement {
    pub fn passed(&self) -> bool {
        self.worst <= self.bound
    }
}

type CheckFn = Box<dyn Fn(usize, &mut ChaCha8Rng) -> crate::Result<Measurement> + Send + Sync>;

pub struct Check {
    pub group: &'static str,
    pub name: &'static str,
    /// Cases are scaled down by this factor for expensive checks.
    pub cost: usize,
    run: CheckFn,
}

impl Check {
    pub fn new(
        group: &'static str,
        name: &'static str,
        run: impl Fn(usize, &mut ChaCha8Rng) -> crate::Result<Measurement> + Send + Sync + 'static,
    ) -> Self {
        Self {
            group,
            name,
            cost: 1,
            run: Box::new(run),
        }
    }

    pub fn with_cost(mut self, cost: usize) -> Self {
        self.cost = cost.max(1);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub group: &'static str,
    pub name: &'static str,
    pub cases: usize,
    pub measurement: Option<Measurement>,
    pub error: Option<String>,
    pub seconds: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.measurement.is_some_and(|m| m.passed())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub results: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(CheckResult::passed)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<11} {:<28} {:>6} {:>11} {:>9} {:>8}  result",
            "group", "check", "cases", "worst", "bound", "time[s]"
        );
        for r in &self.results {
            let (worst, bound) = r
                .measurement
                .map_or(("-".into(), "-".into()), |m| (format!("{:.2e}", m.worst), format!("{:.0e}", m.bound)));
            let verdict = match (&r.error, r.passed()) {
                (Some(e), _) => format!("FAIL ({e})"),
                (None, true) => "pass".into(),
                (None, false) => "FAIL".into(),
            };
            let _ = writeln!(
                out,
                "{:<11} {:<28} {:>6} {:>11} {:>9} {:>8.2}  {verdict}",
                r.group, r.name, r.cases, worst, bound, r.seconds
            );
        }
        out
    }
}

pub fn run_checks(checks: &[Check], level: Level, seed: u64) -> VerifyReport {
    let results = checks
        .iter()
        .enumerate()
        .map(|(i, check)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let cases = (level.cases() / check.cost).max(1);
            let start = Instant::now();
            let outcome = (check.run)(cases, &mut rng);
            let seconds = start.elapsed().as_secs_f64();
            let (measurement, error) = match outcome {
                Ok(m) => (Some(m), None),
                Err(e) => (None, Some(e.to_string())),
            };
            CheckResult {
                group: check.group,
                name: check.name,
                cases,
                measurement,
                error,
                seconds,
            }
        })
        .collect();
    VerifyReport { results }
}

fn gaussian3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::from_fn(|_, _| rng.sample(StandardNormal))
}

fn unit_quaternion(rng: &mut ChaCha8Rng) -> Quaternion {
    loop {
        let q = Quaternion::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        if let Ok(q) = q.normalized() {
            return q;
        }
    }
}

fn worst_of(
    cases: usize,
    bound: f64,
    mut f: impl FnMut() -> crate::Result<f64>,
) -> crate::Result<Measurement> {
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let e = f()?;
        worst = if e.is_nan() { f64::INFINITY } else { worst.max(e) };
    }
    Ok(Measurement { worst, bound })
}

fn random_system(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (DMatrix<f64>, DMatrix<f64>, PoleSet) {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let b = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
    loop {
        let poles: Vec<f64> = (0..n).map(|_| -rng.random_range(0.1..3.0)).collect();
        let mut sorted = poles.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).all(|w| w[1] - w[0] > 0.05) {
            return (a, b, PoleSet::new(poles).expect("distinct negative"));
        }
    }
}

fn rk4_error(h: f64) -> crate::Result<f64> {
    let a = Matrix2::new(0.0, 1.0, -4.0, -0.4);
    let mut x = Vector2::new(1.0, 0.0);
    let n = (1.0 / h).round() as usize;
    for i in 0..n {
        x = rk4_step(|_, x: &Vector2<f64>| Ok(a * x), &x, i as f64 * h, h)?;
    }
    Ok((x - a.exp() * Vector2::new(1.0, 0.0)).norm())
}

/// Every invariant suite of the library.
pub fn standard_checks() -> Vec<Check> {
    vec![
        Check::new("attitude", "skew-cross", |cases, rng| {
            worst_of(cases, 1e-12, || {
                let (v, w) = (gaussian3(rng), gaussian3(rng));
                Ok((skew(&v) * w - v.cross(&w)).norm())
            })
        }),
        Check::new("attitude", "product-unit-norm", |cases, rng| {
            worst_of(cases, 1e-12, || {
                Ok((quat_multiply(&unit_quaternion(rng), &unit_quaternion(rng)).norm() - 1.0).abs())
            })
        }),
        Check::new("attitude", "relative-quaternion", |cases, rng| {
            worst_of(cases, 1e-12, || {
                let (cb, tb) = (unit_quaternion(rng), unit_quaternion(rng));
                let expected = quat_multiply(&quat_inverse(&cb), &tb);
                Ok((relative_quaternion(&cb, &tb).as_vector() - expected.as_vector()).norm())
            })
        }),
        Check::new("attitude", "kinematics-unit-norm", |cases, rng| {
            worst_of(cases, 1e-12, || {
                let mut q = unit_quaternion(rng);
                if q.q0 < 0.0 {
                    q = Quaternion::from_array(q.to_array().map(|c| -c));
                }
                let w = gaussian3(rng);
                let qv_dot = 0.5 * kinematics_matrix(&q.qv)? * w;
                let q0_dot = -0.5 * q.qv.dot(&w);
                Ok((q.q0 * q0_dot + q.qv.dot(&qv_dot)).abs())
            })
        }),
        Check::new("orbit", "kepler-residual", |cases, rng| {
            worst_of(cases, 1e-12, || {
                let m = rng.random_range(-10.0..10.0);
                let e = rng.random_range(0.0..0.99);
                let ea = solve_kepler(m, e)?;
                Ok((ea - e * ea.sin() - m).abs())
            })
        }),
        Check::new("allocation", "feedforward-exact", |cases, rng| {
            let alloc = AllocationConfig::new(2.0, 2.0, 2.0)?;
            worst_of(cases, 1e-10, || {
                let (n_t, n_r) = (gaussian3(rng) * 10.0, gaussian3(rng) * 10.0);
                let u1 = alloc.feedforward(&n_t, &n_r);
                let (f, t) = alloc.wrench(&u1);
                Ok((f - n_t).norm().max((t - n_r).norm()))
            })
        }),
        Check::new("dynamics", "offset-cancellation", |cases, rng| {
            let model = PlantModel::new(SpacecraftParams::reference(), crate::orbit::MU_EARTH, Default::default())?;
            let elements = ScenarioConfig::reference().orbit;
            worst_of(cases, 1e-10, || {
                let state = RelativeState {
                    p: gaussian3(rng) * 10.0,
                    r: gaussian3(rng),
                    q: crate::attitude::ReducedQuaternion::from_quaternion(&unit_quaternion(rng))?,
                    w: gaussian3(rng) * 0.1,
                };
                let target = TargetAttitudeState {
                    q_i_tb: unit_quaternion(rng),
                    w_tb: gaussian3(rng) * 0.05,
                };
                let orbit = propagate_target(&elements, rng.random_range(0.0..5000.0))?.with_chaser(&state.p);
                let plant = model.assemble(&state, &orbit, &target)?;
                let (n_t, n_r) = model.offsets(&state, &orbit, &target)?;
                let u1 = model.alloc.feedforward(&n_t, &n_r);
                Ok((plant.b * u1 - plant.n_d).norm() / plant.n_d.norm().max(1.0))
            })
        }),
        Check::new("robpole", "eigenstructure-residual", |cases, rng| {
            worst_of(cases, 1e-8, || {
                let n = rng.random_range(3..=8);
                let m = rng.random_range(2..=n.min(4));
                let (a, b, poles) = random_system(rng, n, m);
                Ok(crate::robpole::assign_poles(&a, &b, &poles)?.residual)
            })
        })
        .with_cost(5),
        Check::new("robpole", "eigenvalue-placement", |cases, rng| {
            worst_of(cases, 1e-6, || {
                let n = rng.random_range(3..=8);
                let m = rng.random_range(2..=n.min(4));
                let (a, b, poles) = random_system(rng, n, m);
                let g = crate::robpole::assign_poles(&a, &b, &poles)?;
                Ok(eigenvalue_error(&(&a + &b * &g.k), poles.as_slice()))
            })
        })
        .with_cost(5),
        Check::new("robpole", "sweeps-monotone", |cases, rng| {
            worst_of(cases, 1e-9, || {
                let (a, b, poles) = random_system(rng, 6, 2);
                let assigner = RobustPoleAssigner::new(b, SelectionOptions::default())?;
                let g = assigner.assign(&a, &poles)?;
                Ok(g.log_det_history
                    .windows(2)
                    .map(|w| (w[0] - w[1]) / (1.0 + w[0].abs()))
                    .fold(0.0, f64::max))
            })
        })
        .with_cost(5),
        Check::new("integrator", "rk4-order", |_, _| {
            let order = (rk4_error(0.01)? / rk4_error(0.005)?).log2();
            // reported as a shortfall below fourth order
            Ok(Measurement {
                worst: (4.0 - order).max(0.0),
                bound: 0.1,
            })
        })
        .with_cost(usize::MAX),
        Check::new("controller", "reference-poles", |_, _| {
            let cfg = ScenarioConfig::reference();
            let model = PlantModel::new(cfg.params, cfg.orbit.mu, cfg.model)?;
            let mut c = MpcController::new(model, ControllerConfig::new(cfg.controller.poles.clone(), 0.1))?;
            let orbit = propagate_target(&cfg.orbit, 0.0)?;
            let cmd = c.step(&cfg.initial_state, &orbit, &cfg.target_motion)?;
            Ok(Measurement {
                worst: cmd.eigenvalue_error,
                bound: 1e-6,
            })
        })
        .with_cost(usize::MAX),
    ]
}

/// A check that always fails, for exercising the failure path.
pub fn injected_failure() -> Check {
    Check::new("injected", "forced-violation", |_, _| {
        Ok(Measurement {
            worst: 1.0,
            bound: 0.0,
        })
    })
}
