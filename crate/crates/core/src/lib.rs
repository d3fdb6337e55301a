//! Simulation and optimisation of teleportation-based squeezing gates.
//!
//! The crate evaluates closed-form noise models for four squeezer layouts,
//! checks them against a symbolic propagation of the full optical circuit,
//! computes phase-space and Fock-space quality metrics of the squeezed
//! output and optimises the free beam-splitter parameters.

pub mod error;
pub mod fock;
pub mod gaussian;
pub mod noise;
pub mod optimize;
pub mod oracle;
pub mod phase_space;
pub mod quadrature;
pub mod sweep;

pub use error::{Error, Result};
pub use noise::{NoiseModel, Resources, SqueezerConfig, Variant};
pub use phase_space::{PhotonState, TransformedState};

/// Converts a target squeezing scale to the sweep axis `10 log10(s^2)`.
pub fn scale_to_db(s: f64) -> f64 {
    20.0 * s.log10()
}

/// Converts a sweep-axis value `10 log10(s^2)` to the squeezing scale `s`.
pub fn db_to_scale(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}
