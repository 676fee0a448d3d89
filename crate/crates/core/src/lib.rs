//! Rendezvous and soft-docking of a chaser with a target in orbit, with a
//! sampled controller built on robust pole assignment.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod attitude;
pub mod config;
pub mod controller;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod montecarlo;
pub mod orbit;
pub mod output;
pub mod robpole;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
