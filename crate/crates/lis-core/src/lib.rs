//! Dimension reduction and subspace-accelerated MCMC for Bayesian inverse
//! problems.
//!
//! The parameter-to-observable map `G` enters a likelihood (Gaussian or
//! Poisson); the prior is Gaussian, a product of generalized-Gaussian factors,
//! or a wavelet expansion with such factors. From Monte Carlo estimates of
//! prior- or posterior-averaged Fisher information this crate builds a rank-r
//! projector whose range carries the directions in which the data actually
//! update the prior, certifies the induced posterior error through an
//! eigenvalue tail bound, and runs samplers that exploit the split:
//!
//! * [`samplers::subspace_mh`] — MH on the informed subspace against a frozen
//!   sample-average likelihood, lifted to full space by conditional prior draws;
//! * [`samplers::pseudo_marginal_mh`] / [`samplers::recycle_exact`] — exact
//!   full-space posterior sampling at the cost of the subspace chain;
//! * [`samplers::delayed_acceptance_mh`] — two-stage MH screened by the
//!   reduced likelihood;
//! * [`samplers::pcn_mh`] and [`samplers::hmala`] — full-space baselines.
//!
//! [`problems`] ships two self-contained benchmark problems: log-conductivity
//! inversion for an elliptic PDE under an SPDE Gaussian prior, and a Poisson
//! PET model with a Besov (Haar wavelet, Laplace coefficient) prior.

pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod models;
pub mod priors;
pub mod problems;
pub mod reduced;
pub mod rng;
pub mod samplers;
pub mod subspace;
pub(crate) mod util;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;
