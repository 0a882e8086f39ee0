//! Numerical evaluation of motion-induced corrections to atom-surface
//! dispersion interactions in the near field: level shifts, decay rates,
//! Casimir-Polder forces and quantum-friction forces for an atom moving
//! at an arbitrary angle past a planar dielectric half-space.
//!
//! Two independent pipelines are provided. The [`markov`] module evaluates
//! the master-equation route (Doppler-shifted Heisenberg coefficients,
//! dressed frequencies, force decomposition), while [`perturbative`]
//! evaluates the time-dependent perturbation-theory route (transition
//! amplitudes, second- and fourth-order forces). The [`analysis`] module
//! extracts velocity scaling laws from either pipeline and compares them.

pub mod analysis;
pub mod constants;
pub mod error;
pub mod kinematics;
pub mod markov;
pub mod material;
pub mod perturbative;
pub mod quadrature;

pub use error::{Error, Result};
pub use kinematics::MotionState;
pub use markov::{AtomParams, DipoleConfig, ForceReport};
pub use material::MaterialModel;
pub use quadrature::{IntegralResult, QuadratureSpec};
