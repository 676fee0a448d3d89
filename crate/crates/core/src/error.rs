use thiserror::Error;

/// Errors raised by the dynamics, allocation, pole assignment and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singular attitude: reduced quaternion norm {norm} is outside the open unit ball")]
    SingularAttitude { norm: f64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("Kepler iteration did not converge (M = {mean_anomaly}, e = {eccentricity})")]
    KeplerNonConvergence { mean_anomaly: f64, eccentricity: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("thruster configuration matrix has rank {rank}, full row rank {required} is required")]
    AllocationRank { rank: usize, required: usize },

    #[error("input matrix has rank {rank} but {columns} columns")]
    RankDeficientInput { rank: usize, columns: usize },

    #[error("pole {pole} is not assignable: it coincides with an uncontrollable mode")]
    AssignmentInfeasible { pole: f64 },

    #[error("eigenvector selection is degenerate: det(X) stayed zero")]
    DegenerateSelection,

    #[error("eigenvector matrix is ill conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("invalid pole set: {0}")]
    InvalidPoles(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
