//! Distribution theory and Monte Carlo simulation of the one-dimensional
//! telegraph process with an elastic boundary at the origin.
//!
//! The particle moves with unit speed, alternating exponential upward phases
//! (rate `lambda`) and downward phases (rate `mu`). On every visit to the
//! origin it is absorbed with probability `alpha` and otherwise restarts
//! upward immediately.
//!
//! * [`specfun`] evaluates the modified Bessel and hypergeometric series the
//!   closed forms are built from.
//! * [`analytic`] holds the densities, MGFs, moments and the conditional law
//!   within a renewal cycle.
//! * [`numeric`] provides quadrature, numerical MGFs/moments and
//!   goodness-of-fit statistics used to cross-check the closed forms.
//! * [`sim`] is an event-driven sampler of sample paths and absorption records.

pub mod analytic;
pub mod error;
pub mod numeric;
pub mod sim;
pub mod specfun;

pub use analytic::ModelParams;
pub use error::{Error, Result};
pub use specfun::SeriesControl;
