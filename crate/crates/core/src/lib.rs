//! Exact numerics for the renormalisation of the Jaynes-Cummings model.
//!
//! * [`operators`], [`evolution`], [`expm`]: truncated Fock ⊗ spin space,
//!   closed-form evolution operators and a numerical exponential oracle.
//! * [`coupling`], [`flow`]: branches of the renormalisation condition,
//!   probability spectra, beta-functions and the coupling flow through
//!   turning points.
//! * [`effective`], [`continuation`]: the detuning-regulated effective
//!   transition matrix and the root continuation of its renormalisation
//!   condition.
//! * [`branch_id`]: disambiguating the coupling branch with a second
//!   measurement.

pub mod error;
pub mod evolution;
pub mod expm;
pub mod operators;

pub use error::{Error, Result};
pub mod branch_id;
pub mod continuation;
pub mod coupling;
pub mod effective;
pub mod flow;
mod ode;
