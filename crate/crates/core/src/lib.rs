//! Posterior inference for probabilistic programs whose density is
//! differentiable in a continuous trace but depends on discrete nuisance
//! choices made inside the program.
//!
//! The central piece is [`estimator`]: an unbiased estimate of the gradient of
//! the marginal log-density, obtained by drawing the nuisance assignment from
//! its conditional and differentiating the joint. Plugged into
//! stochastic-gradient HMC ([`samplers::sghmc`]) it samples the marginal
//! posterior without ever summing out the nuisance variables. Two baselines
//! are provided for comparison: alternating MH-on-`z` / HMC-on-`x`
//! ([`samplers::composing_mh_hmc`]) and plain HMC on a hand-marginalized
//! program ([`samplers::hmc`]).
//!
//! Model code is written once against [`Scalar`] and evaluated either on
//! plain floats or on the reverse-mode tape in [`autodiff`].

pub mod autodiff;
pub mod bench;
pub mod checks;
pub mod counters;
pub mod dataset;
pub mod diagnostics;
pub mod distributions;
pub mod enumerate;
pub mod error;
pub mod estimator;
pub mod math;
pub mod model;
pub mod models;
pub mod nuisance;
pub mod rng;
pub mod samplers;
pub mod scalar;

pub use error::{Error, Result};
pub use model::{MarginalModel, Nuisance, SitewiseKernel, StochasticModel, TraceSpace};
pub use rng::Rng;
pub use scalar::{Real, Scalar};

/// Default precision for traces, densities and diagnostics.
pub type Float = f64;
/// Tape variable in default precision.
pub type Var<'t> = autodiff::Var<'t, f64>;
/// Tape variable in single precision.
pub type Var32<'t> = autodiff::Var<'t, f32>;
