//! Six-thruster configuration: force map, torque map and feedforward allocation.

use nalgebra::{SMatrix, SVector, Vector3};

use crate::error::{Error, Result};

pub type Matrix3x6 = SMatrix<f64, 3, 6>;
pub type Matrix6 = SMatrix<f64, 6, 6>;
pub type Vector6 = SVector<f64, 6>;

/// Singular values below this are treated as zero when inverting `G`.
pub const PINV_TOLERANCE: f64 = 1e-10;

/// Thruster configuration matrices. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationConfig {
    pub lever_arms: [f64; 3],
    /// Maps thruster forces to body force, `f_c = F_a f_a`.
    pub force_map: Matrix3x6,
    /// Maps thruster forces to body torque, `t_c = T_a f_a`.
    pub torque_map: Matrix3x6,
    /// `[F_a; T_a]`
    pub g: Matrix6,
    pub g_pinv: Matrix6,
}

impl AllocationConfig {
    /// Builds the paired-thruster layout for lever arms `L1, L2, L3` (m).
    pub fn new(l1: f64, l2: f64, l3: f64) -> Result<Self> {
        for (name, l) in [("L1", l1), ("L2", l2), ("L3", l3)] {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("lever arm {l} m must be positive"),
                });
            }
        }
        #[rustfmt::skip]
        let force_map = Matrix3x6::new(
            0.0, 0.0, 1.0, -1.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, 1.0, -1.0,
            1.0, -1.0, 0.0, 0.0, 0.0, 0.0,
        );
        let (h1, h2, h3) = (l1 / 2.0, l2 / 2.0, l3 / 2.0);
        #[rustfmt::skip]
        let torque_map = Matrix3x6::new(
            h2, h2, 0.0, 0.0, h3, h3,
            -h1, -h1, h3, h3, 0.0, 0.0,
            0.0, 0.0, -h2, -h2, h1, h1,
        );
        Self::from_maps([l1, l2, l3], force_map, torque_map)
    }

    pub fn from_maps(lever_arms: [f64; 3], force_map: Matrix3x6, torque_map: Matrix3x6) -> Result<Self> {
        let mut g = Matrix6::zeros();
        g.fixed_view_mut::<3, 6>(0, 0).copy_from(&force_map);
        g.fixed_view_mut::<3, 6>(3, 0).copy_from(&torque_map);

        let svd = g.svd(true, true);
        let rank = svd.rank(PINV_TOLERANCE);
        if rank < 6 {
            return Err(Error::AllocationRank { rank, required: 6 });
        }
        let g_pinv = svd
            .pseudo_inverse(PINV_TOLERANCE)
            .map_err(|e| Error::InvalidParameter {
                name: "G",
                reason: e.to_string(),
            })?;
        Ok(Self {
            lever_arms,
            force_map,
            torque_map,
            g,
            g_pinv,
        })
    }

    /// Body force and torque produced by thruster forces `f_a`.
    pub fn wrench(&self, f_a: &Vector6) -> (Vector3<f64>, Vector3<f64>) {
        (self.force_map * f_a, self.torque_map * f_a)
    }

    /// `u₁ = G† [n_t; n_r]`, the thruster forces that cancel the model offsets.
    pub fn feedforward(&self, n_t: &Vector3<f64>, n_r: &Vector3<f64>) -> Vector6 {
        let mut n = Vector6::zeros();
        n.fixed_rows_mut::<3>(0).copy_from(n_t);
        n.fixed_rows_mut::<3>(3).copy_from(n_r);
        self.g_pinv * n
    }
}

pub fn build_allocation(l1: f64, l2: f64, l3: f64) -> Result<AllocationConfig> {
    AllocationConfig::new(l1, l2, l3)
}

pub fn feedforward(n_t: &Vector3<f64>, n_r: &Vector3<f64>, alloc: &AllocationConfig) -> Vector6 {
    alloc.feedforward(n_t, n_r)
}
