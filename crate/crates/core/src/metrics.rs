//! Scalar summaries of a trajectory: overshoot, zero crossings, settling and
//! thrust peaks.

use serde::{Deserialize, Serialize};

use crate::dynamics::block;
use crate::sim::TrajectoryRecord;

pub const COMPONENT_NAMES: [&str; 12] = [
    "px", "py", "pz", "rx", "ry", "rz", "q1", "q2", "q3", "wx", "wy", "wz",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricOptions {
    /// Settling band for translational components (m, m/s).
    pub position_band: f64,
    /// Settling band for rotational components (quaternion, rad/s).
    pub attitude_band: f64,
    /// Samples within this fraction of a component's reference magnitude are
    /// treated as zero when counting sign changes.
    pub crossing_deadband: f64,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            position_band: 0.05,
            attitude_band: 0.01,
            crossing_deadband: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentMetrics {
    pub name: String,
    /// Largest excursion past zero relative to the reference magnitude.
    pub overshoot: f64,
    pub zero_crossings: usize,
    /// First time after which the component stays inside its band, s.
    pub settling_time: Option<f64>,
    pub peak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub components: Vec<ComponentMetrics>,
    /// Largest single-thruster command magnitude, N.
    pub max_thrust_n: f64,
    pub max_thrust_per_thruster_n: [f64; 6],
    pub terminal_position_norm: f64,
    pub terminal_attitude_norm: f64,
    pub max_quaternion_norm: f64,
    pub max_re_eig: f64,
    pub sup_closed_loop_norm: f64,
    pub max_eigenvalue_error: f64,
    pub max_residual: f64,
    pub held_steps: usize,
    pub final_time: f64,
    pub failed: bool,
}

impl Metrics {
    pub fn component(&self, name: &str) -> Option<&ComponentMetrics> {
        self.components.iter().find(|m| m.name == name)
    }

    /// Largest settling time over the given components; `None` if any never settles.
    pub fn settling_time(&self, names: &[&str]) -> Option<f64> {
        names
            .iter()
            .map(|n| self.component(n).and_then(|m| m.settling_time))
            .try_fold(0.0f64, |acc, t| t.map(|t| acc.max(t)))
    }
}

/// Metrics of a single scalar series sampled at `times`.
pub fn component_metrics(times: &[f64], values: &[f64], band: f64, deadband: f64) -> ComponentMetrics {
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let initial = values.first().copied().unwrap_or(0.0);
    let threshold = deadband * if initial.abs() > 0.0 { initial.abs() } else { peak };
    // sign of the first excursion that clears the deadband
    let sign = values
        .iter()
        .find(|v| v.abs() > threshold)
        .map(|v| v.signum())
        .unwrap_or(0.0);
    let reference = if initial.abs() > threshold { initial.abs() } else { peak };

    let overshoot = if reference > 0.0 {
        values.iter().fold(0.0f64, |m, v| m.max(-sign * v)) / reference
    } else {
        0.0
    };

    let mut zero_crossings = 0;
    let mut last = 0.0;
    for v in values.iter().filter(|v| v.abs() > threshold) {
        if last != 0.0 && v.signum() != last {
            zero_crossings += 1;
        }
        last = v.signum();
    }

    let settling_time = match values.iter().rposition(|v| v.abs() > band) {
        None => times.first().copied(),
        Some(i) if i + 1 < values.len() => Some(times[i + 1]),
        Some(_) => None,
    };

    ComponentMetrics {
        name: String::new(),
        overshoot,
        zero_crossings,
        settling_time,
        peak,
    }
}

pub fn compute_metrics(record: &TrajectoryRecord, options: &MetricOptions) -> Metrics {
    let times: Vec<f64> = record.samples.iter().map(|s| s.t).collect();
    let components = COMPONENT_NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let values: Vec<f64> = record.samples.iter().map(|s| s.x[i]).collect();
            let band = if i < block::Q {
                options.position_band
            } else {
                options.attitude_band
            };
            ComponentMetrics {
                name: name.to_string(),
                ..component_metrics(&times, &values, band, options.crossing_deadband)
            }
        })
        .collect();

    let mut per_thruster = [0.0f64; 6];
    for s in &record.samples {
        for (m, f) in per_thruster.iter_mut().zip(s.f_a.iter()) {
            *m = m.max(f.abs());
        }
    }
    let last = record.samples.last();
    Metrics {
        components,
        max_thrust_n: per_thruster.iter().copied().fold(0.0, f64::max),
        max_thrust_per_thruster_n: per_thruster,
        terminal_position_norm: last.map_or(f64::NAN, |s| s.x.fixed_rows::<3>(block::P).norm()),
        terminal_attitude_norm: last.map_or(f64::NAN, |s| s.x.fixed_rows::<3>(block::Q).norm()),
        max_quaternion_norm: record
            .samples
            .iter()
            .map(|s| s.x.fixed_rows::<3>(block::Q).norm())
            .fold(0.0, f64::max),
        max_re_eig: record.witness.max_real,
        sup_closed_loop_norm: record.witness.sup_norm,
        max_eigenvalue_error: record.controls.iter().map(|c| c.eigenvalue_error).fold(0.0, f64::max),
        max_residual: record.controls.iter().map(|c| c.residual).fold(0.0, f64::max),
        held_steps: record.controls.iter().filter(|c| c.held).count(),
        final_time: last.map_or(0.0, |s| s.t),
        failed: record.failed(),
    }
}
