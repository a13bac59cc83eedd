//! Prior measures and their interaction with rank-r projectors.
//!
//! Sampling on a subspace needs more from a prior than density evaluation:
//! the measure must factorize across the projector split `x = x_r + x_⊥`
//! into an exact marginal on `Im(P)` and conditional on `Ker(P)`. Two cases
//! admit this in closed form and are the only ones accepted (anything else is
//! an [`Error::UnsupportedFactorization`], never a silent approximation):
//!
//! * Gaussian prior with a Γ-orthogonal projector (`W = Γ V`, `VᵀΓV = I`),
//!   e.g. any projector built from the generalized eigenproblem against
//!   `Γ = Σ_pr⁻¹`;
//! * product prior (independent components) with a coordinate projector.
//!
//! Marginal densities are taken with respect to Lebesgue measure on the
//! Γ-orthonormal (resp. canonical) coordinates of `Im(P)`; conditionals on
//! those of `Ker(P)`. With that convention marginal + conditional equals the
//! joint log-density exactly.

mod besov;
mod gaussian;
mod normalization;
mod product_gg;

pub use besov::BesovExpansion;
pub use gaussian::GaussianPrior;
pub use normalization::NormalizationMap;
pub use product_gg::{gg_cdf, gg_cdf_inv, gg_ln_pdf, GgComponent, ProductGgPrior};

use crate::linalg::RankRProjector;
use crate::Result;
use nalgebra::DVector;
use rand::Rng;

pub trait Prior: Send + Sync {
    fn dim(&self) -> usize;

    /// Normalized log-density w.r.t. Lebesgue measure on ℝ^d.
    fn log_density(&self, x: &DVector<f64>) -> f64;

    fn grad_log_density(&self, x: &DVector<f64>) -> DVector<f64>;

    fn sample(&self, rng: &mut dyn Rng) -> DVector<f64>;

    /// Log-density of the marginal of `x_r = P x` on `Im(P)`, evaluated at a
    /// point `xr ∈ Im(P)`.
    fn marginal_log_density(&self, proj: &RankRProjector, xr: &DVector<f64>) -> Result<f64>;

    /// Gradient of [`Prior::marginal_log_density`] with respect to the
    /// subspace coordinates `α = Wᵀx` (an `r`-vector), evaluated at
    /// `xr = Vα`.
    fn marginal_grad_log_density(
        &self,
        proj: &RankRProjector,
        xr: &DVector<f64>,
    ) -> Result<DVector<f64>>;

    /// Log-density of the conditional of `x_⊥` given `x_r` on `Ker(P)`.
    fn conditional_log_density(
        &self,
        proj: &RankRProjector,
        xr: &DVector<f64>,
        xperp: &DVector<f64>,
    ) -> Result<f64>;

    /// Draws `x_⊥ ~ π(· | x_r)`.
    fn conditional_sample(
        &self,
        proj: &RankRProjector,
        xr: &DVector<f64>,
        rng: &mut dyn Rng,
    ) -> Result<DVector<f64>>;

    /// Draws from the marginal of `x_⊥` (used for frozen complement sample
    /// sets). For the supported factorizations the conditional does not
    /// depend on `x_r`, so this coincides with `conditional_sample`.
    fn complement_sample(&self, proj: &RankRProjector, rng: &mut dyn Rng) -> Result<DVector<f64>>;
}
