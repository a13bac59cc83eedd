//! Multivariate Gaussian prior with exact projector factorizations.

use crate::linalg::{RankRProjector, SpdMatrix};
use crate::{Error, Result};
use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Prior;

/// Tolerance for the Γ-orthogonality preconditions (`W ≈ ΓV`, `VᵀΓV ≈ I`)
/// and for membership checks of points in `Im(P)` / `Ker(P)`.
const FACTOR_TOL: f64 = 1e-8;

/// Gaussian measure `N(m, Σ)` on ℝ^d.
///
/// Both the covariance and its inverse (the precision `Γ = Σ⁻¹`) are kept so
/// density, gradient and whitening are all a pair of triangular solves.
#[derive(Clone)]
pub struct GaussianPrior {
    mean: DVector<f64>,
    cov: SpdMatrix,
    precision: SpdMatrix,
    /// `-(d/2) ln 2π - ½ ln det Σ`.
    norm_const: f64,
}

impl GaussianPrior {
    pub fn new(mean: DVector<f64>, cov: SpdMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch {
                context: "GaussianPrior::new",
                expected: cov.dim(),
                got: mean.len(),
            });
        }
        let precision = SpdMatrix::new(cov.inverse())?;
        Ok(Self::assemble(mean, cov, precision))
    }

    /// Builds the prior from its precision matrix `Γ` (the natural input when
    /// the prior is specified through a differential operator).
    pub fn from_precision(mean: DVector<f64>, precision: SpdMatrix) -> Result<Self> {
        if mean.len() != precision.dim() {
            return Err(Error::DimensionMismatch {
                context: "GaussianPrior::from_precision",
                expected: precision.dim(),
                got: mean.len(),
            });
        }
        let cov = SpdMatrix::new(precision.inverse())?;
        Ok(Self::assemble(mean, cov, precision))
    }

    /// Standard normal `N(0, I_d)`.
    pub fn standard(dim: usize) -> Self {
        Self::assemble(
            DVector::zeros(dim),
            SpdMatrix::identity(dim),
            SpdMatrix::identity(dim),
        )
    }

    fn assemble(mean: DVector<f64>, cov: SpdMatrix, precision: SpdMatrix) -> Self {
        let d = mean.len() as f64;
        let norm_const = -0.5 * (d * LN_2PI + cov.ln_det());
        Self {
            mean,
            cov,
            precision,
        norm_const,
        }
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &SpdMatrix {
        &self.cov
    }

    pub fn precision(&self) -> &SpdMatrix {
        &self.precision
    }

    /// Checks the factorization precondition for `proj`: either a coordinate
    /// projector with diagonal covariance, or a Γ-orthogonal projector
    /// (`W = ΓV` with `VᵀΓV = I`, as produced by the generalized eigenproblem
    /// against this prior's precision).
    fn factorization(&self, proj: &RankRProjector) -> Result<Factorization> {
        if proj.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "GaussianPrior projector",
                expected: self.dim(),
                got: proj.dim(),
            });
        }
        if let Some(idx) = proj.coordinates() {
            if self.is_diagonal() {
                return Ok(Factorization::Coordinate(idx.to_vec()));
            }
        }
        let gv = self.precision.matrix() * proj.basis();
        let w_scale = proj.cobasis().amax().max(1.0);
        let dev_w = (&gv - proj.cobasis()).amax();
        let gram = proj.basis().transpose() * &gv;
        let dev_g = (&gram - nalgebra::DMatrix::identity(proj.rank(), proj.rank())).amax();
        if dev_w > FACTOR_TOL * w_scale || dev_g > FACTOR_TOL {
            return Err(Error::UnsupportedFactorization {
                reason: format!(
                    "Gaussian prior requires a Γ-orthogonal projector (or a coordinate \
                     projector with diagonal covariance); got ‖W-ΓV‖={dev_w:.2e}, \
                     ‖VᵀΓV-I‖={dev_g:.2e}"
                ),
            });
        }
        Ok(Factorization::GammaOrthogonal)
    }

    fn is_diagonal(&self) -> bool {
        let m = self.cov.matrix();
        let scale = m.amax().max(1.0);
        for i in 0..m.nrows() {
            for j in 0..i {
                if m[(i, j)].abs() > FACTOR_TOL * scale {
                    return false;
                }
            }
        }
        true
    }

    fn check_in_range(&self, proj: &RankRProjector, xr: &DVector<f64>) -> Result<()> {
        let residual = proj.range_residual(xr);
        if residual > FACTOR_TOL * (1.0 + xr.amax()) {
            return Err(Error::NotInRange { residual });
        }
        Ok(())
    }

    fn check_in_kernel(&self, proj: &RankRProjector, xperp: &DVector<f64>) -> Result<()> {
        let residual = proj.apply(xperp).amax();
        if residual > FACTOR_TOL * (1.0 + xperp.amax()) {
            return Err(Error::NotInRange { residual });
        }
        Ok(())
    }
}

enum Factorization {
    /// Coordinate projector over a diagonal covariance: the measure is a
    /// product over coordinates and splits along any index set.
    Coordinate(Vec<usize>),
    /// `Im(P)` and `Ker(P)` are Γ-orthogonal, so the Gaussian splits into
    /// independent standard-normal coefficients on each side.
    GammaOrthogonal,
}

const LN_2PI: f64 = 1.837_877_066_409_345_3;

impl Prior for GaussianPrior {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, x: &DVector<f64>) -> f64 {
        let delta = x - &self.mean;
        -0.5 * self.cov.inv_quad(&delta) + self.norm_const
    }

    fn grad_log_density(&self, x: &DVector<f64>) -> DVector<f64> {
        let delta = x - &self.mean;
        -self.cov.solve(&delta)
    }

    fn sample(&self, rng: &mut dyn Rng) -> DVector<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| {
            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut *rng)
        });
        &self.mean + self.cov.factor_mul(&z)
    }

    /// Marginal of `x_r = Px` w.r.t. Lebesgue measure on the Γ-orthonormal
    /// coordinates of `Im(P)` (canonical coordinates for the coordinate
    /// case). With that convention the marginal and conditional log-densities
    /// add up to the joint exactly.
    fn marginal_log_density(&self, proj: &RankRProjector, xr: &DVector<f64>) -> Result<f64> {
        let fact = self.factorization(proj)?;
        self.check_in_range(proj, xr)?;
        match fact {
            Factorization::Coordinate(idx) => {
                let var = self.cov.matrix();
                Ok(idx
                    .iter()
                    .map(|&i| normal_ln_pdf(xr[i], self.mean[i], var[(i, i)]))
                    .sum())
            }
            Factorization::GammaOrthogonal => {
                // In Γ-orthonormal coordinates α = Wᵀx the prior is N(Wᵀm, I);
                // integrating the complement out of the joint leaves an extra
                // -½ ln det Σ from the volume of the embedding x = Vα.
                let dev = proj.coefficients(xr) - proj.coefficients(&self.mean);
                let r = proj.rank() as f64;
                Ok(-0.5 * dev.norm_squared() - 0.5 * r * LN_2PI + 0.5 * self.precision.ln_det())
            }
        }
    }

    fn marginal_grad_log_density(
        &self,
        proj: &RankRProjector,
        xr: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let fact = self.factorization(proj)?;
        self.check_in_range(proj, xr)?;
        match fact {
            Factorization::Coordinate(idx) => {
                let var = self.cov.matrix();
                Ok(DVector::from_fn(idx.len(), |k, _| {
                    let i = idx[k];
                    -(xr[i] - self.mean[i]) / var[(i, i)]
                }))
            }
            Factorization::GammaOrthogonal => {
                Ok(-(proj.coefficients(xr) - proj.coefficients(&self.mean)))
            }
        }
    }

    fn conditional_log_density(
        &self,
        proj: &RankRProjector,
        xr: &DVector<f64>,
        xperp: &DVector<f64>,
    ) -> Result<f64> {
        let fact = self.factorization(proj)?;
        self.check_in_range(proj, xr)?;
        self.check_in_kernel(proj, xperp)?;
        // For both supported factorizations the conditional is independent of
        // x_r; it is the complement part of the prior shifted to (I-P)m.
        match fact {
            Factorization::Coordinate(idx) => {
                let mut in_range = vec![false; self.dim()];
                for &i in &idx {
                    in_range[i] = true;
                }
                let var = self.cov.matrix();
                Ok((0..self.dim())
                    .filter(|&i| !in_range[i])
                    .map(|i| normal_ln_pdf(xperp[i], self.mean[i], var[(i, i)]))
                    .sum())
            }
            Factorization::GammaOrthogonal => {
                let mperp = &self.mean - proj.apply(&self.mean);
                let delta = xperp - mperp;
                let k = (self.dim() - proj.rank()) as f64;
                Ok(-0.5 * self.precision.quad(&delta) - 0.5 * k * LN_2PI)
            }
        }
    }

    fn conditional_sample(
        &self,
        proj: &RankRProjector,
        xr: &DVector<f64>,
        rng: &mut dyn Rng,
    ) -> Result<DVector<f64>> {
        self.factorization(proj)?;
        self.check_in_range(proj, xr)?;
        let full = self.sample(rng);
        Ok(&full - proj.apply(&full))
    }

    fn complement_sample(&self, proj: &RankRProjector, rng: &mut dyn Rng) -> Result<DVector<f64>> {
        self.factorization(proj)?;
        let full = self.sample(rng);
        Ok(&full - proj.apply(&full))
    }
}

fn normal_ln_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * d * d / var - 0.5 * (LN_2PI + var.ln())
}
