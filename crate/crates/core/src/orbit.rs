//! Two-body target orbit: Kepler's equation, true anomaly and its rates.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geocentric gravitational constant, m³/s².
pub const MU_EARTH: f64 = 3.986004418e14;
/// Mean Earth radius, m.
pub const EARTH_RADIUS: f64 = 6_371_000.0;

const KEPLER_MAX_ITER: usize = 50;
const KEPLER_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitElements {
    /// m
    pub semi_major_axis: f64,
    pub eccentricity: f64,
    /// True anomaly at t = 0, rad.
    pub true_anomaly_0: f64,
    /// m³/s²
    pub mu: f64,
}

impl OrbitElements {
    pub fn circular(semi_major_axis: f64) -> Self {
        Self {
            semi_major_axis,
            eccentricity: 0.0,
            true_anomaly_0: 0.0,
            mu: MU_EARTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.semi_major_axis > EARTH_RADIUS) {
            return Err(Error::InvalidParameter {
                name: "semi_major_axis",
                reason: format!(
                    "{} m does not exceed the Earth radius {EARTH_RADIUS} m",
                    self.semi_major_axis
                ),
            });
        }
        if !(0.0..1.0).contains(&self.eccentricity) {
            return Err(Error::InvalidParameter {
                name: "eccentricity",
                reason: format!("{} is outside [0, 1)", self.eccentricity),
            });
        }
        if !(self.mu > 0.0) {
            return Err(Error::InvalidParameter {
                name: "mu",
                reason: format!("{} must be positive", self.mu),
            });
        }
        Ok(())
    }

    /// Mean motion, rad/s.
    pub fn mean_motion(&self) -> f64 {
        (self.mu / self.semi_major_axis.powi(3)).sqrt()
    }

    pub fn period(&self) -> f64 {
        TAU / self.mean_motion()
    }

    /// Specific angular momentum, m²/s.
    pub fn angular_momentum(&self) -> f64 {
        let e = self.eccentricity;
        (self.mu * self.semi_major_axis * (1.0 - e * e)).sqrt()
    }
}

/// Target orbit snapshot, plus the chaser radius derived from the relative position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitState {
    pub r_t: f64,
    pub gamma: f64,
    pub gamma_dot: f64,
    pub gamma_ddot: f64,
    pub r_c: f64,
}

impl OrbitState {
    pub fn with_chaser(mut self, p: &Vector3<f64>) -> Self {
        self.r_c = chaser_radius(self.r_t, p);
        self
    }
}

/// Solves `E − e sin E = M` by damped Newton iteration from `E₀ = M`.
pub fn solve_kepler(mean_anomaly: f64, e: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&e) {
        return Err(Error::InvalidParameter {
            name: "eccentricity",
            reason: format!("{e} is outside [0, 1)"),
        });
    }
    let mut ecc_anomaly = mean_anomaly;
    for _ in 0..KEPLER_MAX_ITER {
        let f = ecc_anomaly - e * ecc_anomaly.sin() - mean_anomaly;
        if f.abs() < KEPLER_TOL {
            return Ok(ecc_anomaly);
        }
        let step = (f / (1.0 - e * ecc_anomaly.cos())).clamp(-1.0, 1.0);
        ecc_anomaly -= step;
    }
    let f = ecc_anomaly - e * ecc_anomaly.sin() - mean_anomaly;
    if f.abs() < 1e-12 {
        Ok(ecc_anomaly)
    } else {
        Err(Error::KeplerNonConvergence {
            mean_anomaly,
            eccentricity: e,
        })
    }
}

fn true_from_eccentric(ecc_anomaly: f64, e: f64) -> f64 {
    let half = 0.5 * ecc_anomaly;
    2.0 * ((1.0 + e).sqrt() * half.sin()).atan2((1.0 - e).sqrt() * half.cos())
}

fn eccentric_from_true(gamma: f64, e: f64) -> f64 {
    let half = 0.5 * gamma;
    2.0 * ((1.0 - e).sqrt() * half.sin()).atan2((1.0 + e).sqrt() * half.cos())
}

/// Target orbit at time `t` seconds after epoch. `r_c` is left equal to `r_t`;
/// use [`OrbitState::with_chaser`] to fill it from the relative position.
///
/// The returned true anomaly is continuous in time (not wrapped).
pub fn propagate_target(elements: &OrbitElements, t: f64) -> Result<OrbitState> {
    let a = elements.semi_major_axis;
    let e = elements.eccentricity;
    let mu = elements.mu;

    if e == 0.0 {
        let n = elements.mean_motion();
        return Ok(OrbitState {
            r_t: a,
            gamma: elements.true_anomaly_0 + n * t,
            gamma_dot: n,
            gamma_ddot: 0.0,
            r_c: a,
        });
    }

    let e0 = eccentric_from_true(elements.true_anomaly_0, e);
    let m0 = e0 - e * e0.sin();
    let m = m0 + elements.mean_motion() * t;
    // wrap into [-π, π) and remember the revolution count
    let revs = ((m + PI) / TAU).floor();
    let m_wrapped = m - revs * TAU;
    let ecc_anomaly = solve_kepler(m_wrapped, e)?;

    let gamma_wrapped = true_from_eccentric(ecc_anomaly, e);
    let r_t = a * (1.0 - e * ecc_anomaly.cos());
    let h = elements.angular_momentum();
    let gamma_dot = h / (r_t * r_t);
    let r_t_dot = mu / h * e * gamma_wrapped.sin();
    let gamma_ddot = -2.0 * r_t_dot * gamma_dot / r_t;

    // keep γ continuous with the epoch value
    let offset = (elements.true_anomaly_0 / TAU).round() * TAU;
    Ok(OrbitState {
        r_t,
        gamma: gamma_wrapped + revs * TAU + offset,
        gamma_dot,
        gamma_ddot,
        r_c: r_t,
    })
}

/// `‖[r_t + x, y, z]‖`: the chaser sits at the target position plus `p` in LVLH axes.
pub fn chaser_radius(r_t: f64, p: &Vector3<f64>) -> f64 {
    Vector3::new(r_t + p.x, p.y, p.z).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const A_250KM: f64 = EARTH_RADIUS + 250_000.0;

    fn bisect_kepler(m: f64, e: f64) -> f64 {
        let (mut lo, mut hi) = (m - 1.0 - e, m + 1.0 + e);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - e * mid.sin() - m > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn kepler_examples() {
        assert_eq!(solve_kepler(1.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(solve_kepler(PI, 0.3).unwrap(), PI, epsilon = 1e-15);
        let oracle = bisect_kepler(1.0, 0.1);
        assert_relative_eq!(oracle, 1.08859, epsilon = 1e-5);
        assert_relative_eq!(solve_kepler(1.0, 0.1).unwrap(), oracle, epsilon = 1e-12);
        assert!(solve_kepler(1.0, 1.0).is_err());
    }

    #[test]
    fn circular_250km() {
        let el = OrbitElements::circular(A_250KM);
        assert_eq!(A_250KM, 6_621_000.0);
        for t in [0.0, 10.0, 1234.5] {
            let s = propagate_target(&el, t).unwrap();
            assert_eq!(s.r_t, A_250KM);
            assert_eq!(s.gamma_ddot, 0.0);
            assert_relative_eq!(s.gamma_dot, (MU_EARTH / A_250KM.powi(3)).sqrt());
        }
        let n = propagate_target(&el, 0.0).unwrap().gamma_dot;
        assert_relative_eq!(n, 1.1719e-3, epsilon = 1e-7);
        let full = propagate_target(&el, el.period()).unwrap();
        assert_relative_eq!(full.gamma, TAU, epsilon = 1e-12);
    }

    #[test]
    fn elliptic_angular_momentum_conserved() {
        let el = OrbitElements {
            semi_major_axis: 7_000_000.0,
            eccentricity: 0.1,
            true_anomaly_0: 0.3,
            mu: MU_EARTH,
        };
        let h0 = {
            let s = propagate_target(&el, 0.0).unwrap();
            s.r_t * s.r_t * s.gamma_dot
        };
        let period = el.period();
        let mut prev_gamma = propagate_target(&el, 0.0).unwrap().gamma;
        assert_relative_eq!(prev_gamma, 0.3, epsilon = 1e-12);
        for k in 1..=200 {
            let s = propagate_target(&el, period * k as f64 / 200.0).unwrap();
            assert_relative_eq!(s.r_t * s.r_t * s.gamma_dot, h0, max_relative = 1e-6);
            assert!(s.gamma > prev_gamma, "true anomaly must increase monotonically");
            prev_gamma = s.gamma;
        }
        assert_relative_eq!(prev_gamma, 0.3 + TAU, epsilon = 1e-9);
    }

    #[test]
    fn elliptic_rates_match_finite_differences() {
        let el = OrbitElements {
            semi_major_axis: 7_200_000.0,
            eccentricity: 0.2,
            true_anomaly_0: 1.0,
            mu: MU_EARTH,
        };
        let h = 0.5;
        for t in [0.0, 900.0, 2500.0] {
            let s = propagate_target(&el, t).unwrap();
            let fwd = propagate_target(&el, t + h).unwrap();
            let back = propagate_target(&el, t - h).unwrap();
            assert_relative_eq!((fwd.gamma - back.gamma) / (2.0 * h), s.gamma_dot, max_relative = 1e-6);
            assert_relative_eq!(
                (fwd.gamma_dot - back.gamma_dot) / (2.0 * h),
                s.gamma_ddot,
                max_relative = 1e-4
            );
        }
    }

    #[test]
    fn chaser_radius_examples() {
        assert_eq!(chaser_radius(A_250KM, &Vector3::zeros()), A_250KM);
        let p = Vector3::new(10.0, -10.0, 10.0);
        let expected = ((A_250KM + 10.0).powi(2) + 200.0).sqrt();
        assert_relative_eq!(chaser_radius(A_250KM, &p), expected, max_relative = 1e-15);
        assert_eq!(chaser_radius(A_250KM, &Vector3::new(-A_250KM, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn validation() {
        assert!(OrbitElements::circular(6_000_000.0).validate().is_err());
        assert!(OrbitElements::circular(A_250KM).validate().is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn kepler_residual(m in -10.0..10.0f64, e in 0.0..0.99f64) {
            let ecc = solve_kepler(m, e).unwrap();
            prop_assert!((ecc - e * ecc.sin() - m).abs() < 1e-12);
        }
    }
}
