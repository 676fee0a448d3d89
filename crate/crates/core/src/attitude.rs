//! Quaternion algebra and the reduced-quaternion attitude kinematics.
//!
//! Quaternions are stored scalar-first, `[q0, q1, q2, q3]`, and compose with the
//! Hamilton product. The rotation matrix built from a quaternion is the
//! frame-transformation form `(q0² − qᵀq) I + 2 q qᵀ − 2 q0 S(q)`, which composes
//! in reverse order of the product: `R(a ⊗ b) = R(b) R(a)`.

use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Round-off allowance when reconstructing `q0` from the vector part.
pub const BALL_TOLERANCE: f64 = 1e-9;

/// Cross-product operator: `skew(v) * w == v × w`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub q0: f64,
    pub qv: Vector3<f64>,
}

impl Quaternion {
    pub fn new(q0: f64, q1: f64, q2: f64, q3: f64) -> Self {
        Self {
            q0,
            qv: Vector3::new(q1, q2, q3),
        }
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0)
    }

    pub fn from_array(c: [f64; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.q0, self.qv.x, self.qv.y, self.qv.z]
    }

    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.q0, self.qv.x, self.qv.y, self.qv.z)
    }

    pub fn norm(&self) -> f64 {
        (self.q0 * self.q0 + self.qv.norm_squared()).sqrt()
    }

    /// Scales to unit norm. A zero quaternion is a parameter error.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidParameter {
                name: "quaternion",
                reason: format!("cannot normalize quaternion with norm {n}"),
            });
        }
        Ok(Self {
            q0: self.q0 / n,
            qv: self.qv / n,
        })
    }

    /// Conjugate, which is the inverse for unit quaternions.
    pub fn inverse(&self) -> Self {
        Self {
            q0: self.q0,
            qv: -self.qv,
        }
    }

    /// Rotation about a unit axis by `angle` radians.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Self {
            q0: c,
            qv: axis.normalize() * s,
        }
    }

    /// `(q0² − qᵀq) I + 2 q qᵀ − 2 q0 S(q)`.
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let q = &self.qv;
        Matrix3::identity() * (self.q0 * self.q0 - q.norm_squared()) + q * q.transpose() * 2.0
            - skew(q) * (2.0 * self.q0)
    }

    /// Matrix `M(b)` such that `a ⊗ b = M(b) [a0; av]`.
    fn right_product_matrix(&self) -> Matrix4<f64> {
        let (t0, t1, t2, t3) = (self.q0, self.qv.x, self.qv.y, self.qv.z);
        Matrix4::new(
            t0, -t1, -t2, -t3, //
            t1, t0, t3, -t2, //
            t2, -t3, t0, t1, //
            t3, t2, -t1, t0,
        )
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, rhs: Quaternion) -> Quaternion {
        quat_multiply(&self, &rhs)
    }
}

/// Hamilton product `a ⊗ b`.
pub fn quat_multiply(a: &Quaternion, b: &Quaternion) -> Quaternion {
    Quaternion {
        q0: a.q0 * b.q0 - a.qv.dot(&b.qv),
        qv: b.qv * a.q0 + a.qv * b.q0 + a.qv.cross(&b.qv),
    }
}

pub fn quat_inverse(a: &Quaternion) -> Quaternion {
    a.inverse()
}

/// Relative attitude `q_cb⁻¹ ⊗ q_tb`, evaluated as the 4×4 product of the
/// target's right-multiplication matrix with the conjugated chaser quaternion.
pub fn relative_quaternion(q_i_cb: &Quaternion, q_i_tb: &Quaternion) -> Quaternion {
    let v = q_i_tb.right_product_matrix() * q_i_cb.inverse().as_vector();
    Quaternion::new(v[0], v[1], v[2], v[3])
}

pub fn rotation_from_quat(q: &Quaternion) -> Matrix3<f64> {
    q.rotation_matrix()
}

/// Vector part of a unit quaternion with the scalar part kept non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedQuaternion(Vector3<f64>);

impl ReducedQuaternion {
    /// Accepts vectors with `‖qv‖ ≤ 1 + BALL_TOLERANCE`; anything beyond is singular.
    pub fn new(qv: Vector3<f64>) -> Result<Self> {
        let norm = qv.norm();
        if !norm.is_finite() || norm > 1.0 + BALL_TOLERANCE {
            return Err(Error::SingularAttitude { norm });
        }
        Ok(Self(qv))
    }

    pub fn identity() -> Self {
        Self(Vector3::zeros())
    }

    /// Drops the scalar part, flipping to the shadow quaternion when `q0 < 0`.
    pub fn from_quaternion(q: &Quaternion) -> Result<Self> {
        let q = q.normalized()?;
        let qv = if q.q0 < 0.0 { -q.qv } else { q.qv };
        Self::new(qv)
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn scalar(&self) -> f64 {
        (1.0 - self.0.norm_squared()).max(0.0).sqrt()
    }

    pub fn to_quaternion(&self) -> Quaternion {
        Quaternion {
            q0: self.scalar(),
            qv: self.0,
        }
    }
}

/// Reduced-quaternion kinematics matrix `T(q)` with `q̇ = ½ T(q) ω`.
///
/// Fails at and beyond the singular point `q0 = 0`.
pub fn kinematics_matrix(qv: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let norm_sq = qv.norm_squared();
    if !norm_sq.is_finite() || norm_sq >= 1.0 {
        return Err(Error::SingularAttitude {
            norm: norm_sq.sqrt(),
        });
    }
    let q0 = (1.0 - norm_sq).sqrt();
    Ok(Matrix3::new(
        q0, -qv.z, qv.y, //
        qv.z, q0, -qv.x, //
        -qv.y, qv.x, q0,
    ))
}

/// `ω = ω_cb − R ω_tb`, all rates in rad/s.
pub fn relative_angular_velocity(
    w_cb: &Vector3<f64>,
    w_tb: &Vector3<f64>,
    rotation: &Matrix3<f64>,
) -> Vector3<f64> {
    w_cb - rotation * w_tb
}
