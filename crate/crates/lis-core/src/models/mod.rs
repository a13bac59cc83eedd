//! Forward models and observation likelihoods.
//!
//! A [`ForwardModel`] is a deterministic parameter-to-observable map `G` with
//! a Jacobian; a [`LikelihoodModel`] combines it with a noise law and a data
//! record into `x ↦ log p(y | x)`. Likelihoods also expose the Fisher
//! information of the data law pulled back to parameter space, which is the
//! integrand of the prior-averaged sensitivity matrix driving subspace
//! construction.

mod gaussian;
mod linear;
mod poisson;
mod transformed;

pub use gaussian::GaussianLikelihood;
pub use linear::LinearModel;
pub use poisson::PoissonLikelihood;
pub use transformed::TransformedLikelihood;

use crate::Result;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Deterministic map `G : ℝ^n → ℝ^m` with first-order sensitivities.
pub trait ForwardModel: Send + Sync {
    fn dim_in(&self) -> usize;

    fn dim_out(&self) -> usize;

    fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>>;

    /// Dense Jacobian `∇G(x)` (`m × n`).
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// `∇G(x)ᵀ v` — overridable with an adjoint solve when forming the full
    /// Jacobian would be wasteful for a single direction.
    fn jacobian_t_apply(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.jacobian(x)?.transpose() * v)
    }
}

/// Observation log-likelihood `x ↦ log p(y | x)` for a fixed data record,
/// together with the Fisher information of the data law.
pub trait LikelihoodModel: Send + Sync {
    /// Parameter dimension.
    fn dim(&self) -> usize;

    /// Number of observations.
    fn dim_obs(&self) -> usize;

    /// Normalized log-density of the stored data given `x`.
    fn log_likelihood(&self, x: &DVector<f64>) -> Result<f64>;

    fn grad_log_likelihood(&self, x: &DVector<f64>) -> Result<DVector<f64>>;

    /// Fisher information `E_y[∇ₓ log p(y|x) ∇ₓ log p(y|x)ᵀ]` at `x`. Does
    /// not involve the stored data.
    fn fisher(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// Draws a synthetic data record from the data law at `x`, ignoring the
    /// stored data.
    fn simulate(&self, x: &DVector<f64>, rng: &mut dyn Rng) -> Result<DVector<f64>>;
}

fn ensure_finite(v: &DVector<f64>, context: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(crate::Error::NonFinite { context })
    }
}

fn ensure_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(crate::Error::DimensionMismatch {
            context,
            expected,
            got,
        })
    }
}
