//! Componentwise transport of a standard Gaussian onto a product
//! generalized-Gaussian prior.
//!
//! `T_i = Φ_i⁻¹ ∘ Ψ` (with `Ψ` the standard normal CDF and `Φ_i` the CDF of
//! coordinate `i`) pushes `z ~ N(0, I)` forward to the product prior. Solving
//! in the normalized variable `z` lets the Gaussian dimension-reduction
//! machinery — built on the identity prior metric — drive non-Gaussian
//! priors: the forward model is composed with `T` and the subspace is found
//! in `z`-space.

use crate::{Error, Result};
use nalgebra::DVector;
use statrs::function::erf::{erfc, erfc_inv};

use super::product_gg::{gg_cdf, gg_cdf_inv, gg_ln_pdf, GgComponent};
use super::ProductGgPrior;

const LN_2PI: f64 = 1.837_877_066_409_345_3;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// The monotone map `T : ℝ^d → ℝ^d`, `T_i(z) = Φ_i⁻¹(Ψ(z_i))`.
///
/// CDF values are clamped to `[1e-15, 1 - 1e-15]` before inversion, so the
/// map saturates beyond roughly `|z| = 7.9`; within that range forward and
/// inverse are mutual inverses to near machine precision.
#[derive(Debug, Clone)]
pub struct NormalizationMap {
    comps: Vec<GgComponent>,
}

impl NormalizationMap {
    pub fn new(comps: Vec<GgComponent>) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::Empty {
                context: "NormalizationMap::new",
            });
        }
        Ok(Self { comps })
    }

    pub fn iid(dim: usize, p: f64, gamma: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty {
                context: "NormalizationMap::iid",
            });
        }
        let comp = GgComponent::new(p, gamma)?;
        Ok(Self {
            comps: vec![comp; dim],
        })
    }

    /// The map whose pushforward of `N(0, I)` is `prior`.
    pub fn for_prior(prior: &ProductGgPrior) -> Self {
        Self {
            comps: prior.components().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn components(&self) -> &[GgComponent] {
        &self.comps
    }

    pub fn forward_one(&self, i: usize, z: f64) -> f64 {
        gg_cdf_inv(std_normal_cdf(z), self.comps[i])
    }

    pub fn forward(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| self.forward_one(i, z[i]))
    }

    pub fn inverse(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| {
            std_normal_cdf_inv(gg_cdf(x[i], self.comps[i]))
        })
    }

    /// Diagonal of the Jacobian `∇T(z)`: `T_i'(z_i) = ψ(z_i) / φ_i(T_i(z_i))`
    /// with `ψ`, `φ_i` the respective densities.
    pub fn jacobian_diag(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| {
            let x = self.forward_one(i, z[i]);
            let ln_psi = -0.5 * z[i] * z[i] - 0.5 * LN_2PI;
            (ln_psi - gg_ln_pdf(x, self.comps[i])).exp()
        })
    }
}

/// `Ψ(z) = ½ erfc(-z/√2)`, accurate in both tails.
fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// `Ψ⁻¹(u)` via the complementary error function, using whichever tail of
/// `u` is smaller.
fn std_normal_cdf_inv(u: f64) -> f64 {
    let u = u.clamp(1e-15, 1.0 - 1e-15);
    if u <= 0.5 {
        -SQRT_2 * erfc_inv(2.0 * u)
    } else {
        SQRT_2 * erfc_inv(2.0 * (1.0 - u))
    }
}
