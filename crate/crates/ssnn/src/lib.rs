//! Grey-box nonlinear state-space identification with neural completion
//! functions.
//!
//! A known ("physics") state-space model is augmented with one-hidden-layer
//! networks on the state transition and output map. The augmented model is
//! trained by simulation error minimization with Levenberg-Marquardt, under
//! one of three objectives:
//!
//! * `Baseline` — plain simulation-error cost,
//! * `Classical` — output-level regularization towards the prior model on a
//!   separate regularization input,
//! * `Wpgnn` — kernel-weighted regularization of the completion functions
//!   themselves, active only where the training data is uninformative.
//!
//! The [`benchmark`] module regenerates the SISO study the crate is validated
//! against, and the `ssnn` CLI (separate crate) drives it from config files.
//!
//! Core types are generic over the scalar via [`Scalar`]; `*64` aliases at
//! the crate root cover the common double-precision case.

pub mod benchmark;
pub mod error;
pub mod lm;
pub mod model;
pub mod network;
pub mod objectives;
pub mod prior;
pub mod scalar;
pub mod signal;

pub use error::{Error, Result};
pub use model::{simulate_prior, AugmentedModel};
pub use network::{rbf_activation, CompletionNetwork};
pub use prior::{LinearPrior, PriorModel};
pub use scalar::{real, Scalar};
pub use signal::Signal;

/// Double-precision signal.
pub type Signal64 = Signal<f64>;
/// Double-precision linear prior.
pub type LinearPrior64 = LinearPrior<f64>;
/// Double-precision completion network.
pub type CompletionNetwork64 = CompletionNetwork<f64>;
/// Double-precision augmented model over a linear prior.
pub type AugmentedModel64 = AugmentedModel<f64, LinearPrior<f64>>;
