//! Numerical model of an optical cavity with a movable mirror and an embedded
//! quantum-dot exciton, driven by an amplitude-modulated pump while the dot
//! resonance is modulated electrically.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: parameters, the two periodic modulations and validation.
//! * [`meanfield`]: the classical nonlinear equations for the mean amplitudes,
//!   a fixed-step RK4 integrator and limit-cycle detection.
//! * [`perturbative`]: the double Fourier / coupling-power expansion of the
//!   asymptotic limit cycle.
//! * [`covariance`]: the drift matrix of the linearised quadrature
//!   fluctuations and the Lyapunov equation for their correlation matrix.
//! * [`entanglement`]: logarithmic negativity of two-mode reductions.
//!
//! All quantities are dimensionless, frequencies in units of the mechanical
//! frequency.

pub mod covariance;
pub mod entanglement;
mod error;
pub mod meanfield;
pub mod model;
pub mod perturbative;

pub use error::{Error, Result};
pub use model::{MeanFieldState, ParamViolation, SystemParams, ValidationErrors};
