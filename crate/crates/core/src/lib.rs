//! Binding thresholds for two and three identical bosons in two dimensions.
//!
//! Units throughout: hbar = m = 1, so the pair reduced mass is 1/2 and
//! hbar^2/(2 mu) = 1. Lengths are measured in the potential's own scale
//! (`b`, `Rs` or `d`) and energies in the inverse square of that scale.

pub mod error;
pub mod hyperradial;
pub mod potentials;
pub mod radial;
pub mod numerics;
pub mod specfun;
pub mod sweep;
pub mod threebody;
pub mod twobody;

pub use error::{Error, Result};
