//! Exact finite-lattice model of probe-based quantum measurement.
//!
//! A chain of qudits evolves under a brickwork circuit with a strict light
//! cone. Pointlike probes couple to it at spacetime cells; the comparison of
//! coupled and free dynamics gives a unitary scattering map from which
//! induced observables and state-update rules follow. The [`protocols`]
//! module checks that local couplings never signal between spacelike regions
//! and that a deliberately non-local probe does.

pub mod causal;
pub mod error;
pub mod lattice_qft;
pub mod probes;
pub mod protocols;
pub mod qop;
pub mod rng;
pub mod updates;

pub use error::{Error, Result};
