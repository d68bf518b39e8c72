//! Self-repulsive Langevin dynamics.
//!
//! Langevin MCMC whose drift is augmented with a Stein variational
//! (SVGD-style) velocity field computed against the chain's own thinned past
//! samples. The repulsive field vanishes in expectation under the target, so
//! the stationary law is unchanged while autocorrelation drops.
//!
//! Modules:
//!
//! * [`targets`]: potentials with analytic gradients, exact samplers, moments.
//! * [`kernel`]: RBF kernel and the median bandwidth rule.
//! * [`stein`]: the Stein velocity field and the Stein-identity residual.
//! * [`dynamics`]: Langevin, self-repulsive Langevin, SVGD, general `D`/`Q`
//!   dynamics, hyperparameter heuristics.
//! * [`diagnostics`]: MMD, Wasserstein-1, ESS, autocorrelation, moments.

pub mod diagnostics;
pub mod dynamics;
mod error;
pub mod kernel;
pub mod rng;
mod samples;
pub mod stein;
pub mod targets;

pub use error::{Error, Result};
pub use samples::SampleMatrix;

/// Matrix types used by [`dynamics::GeneralDynamics`].
pub use nalgebra;
