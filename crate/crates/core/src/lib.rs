//! Linearized model of a nonreciprocal optomechanical circulator: a driven
//! cavity coupled to two mechanical modes and, through a fiber, to an
//! auxiliary cavity. The crate builds the mean-field working point,
//! adiabatically eliminates the driven cavity into an effective three-mode
//! model, evaluates scattering and time-domain response, compares the
//! reduced model against the full four-mode dynamics, and evaluates
//! Bell-CHSH correlations of the output modes.
//!
//! Modules are layered bottom-up:
//!
//! - [`model`] — physical parameters, mean-field solution, linearization;
//! - [`elimination`] — adiabatic elimination into an effective model;
//! - [`scattering`] — three-port scattering, sweeps, circulator search;
//! - [`full_model`] — four-mode reference dynamics and time integration;
//! - [`bell`] — CHSH closed form, general formula, operator oracle.

pub mod bell;
pub mod elimination;
pub mod error;
pub mod full_model;
pub mod model;
pub mod scattering;

pub use error::{ModelError, Result};
