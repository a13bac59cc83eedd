//! Additive Gaussian observation noise: `y = G(x) + ε`, `ε ~ N(0, Σ_obs)`.

use crate::linalg::SpdMatrix;
use crate::Result;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{ensure_dim, ensure_finite, ForwardModel, LikelihoodModel};

pub struct GaussianLikelihood<M> {
    model: M,
    noise: SpdMatrix,
    data: DVector<f64>,
    /// `-(m/2) ln 2π - ½ ln det Σ_obs`.
    norm_const: f64,
}

impl<M: ForwardModel> GaussianLikelihood<M> {
    pub fn new(model: M, noise: SpdMatrix, data: DVector<f64>) -> Result<Self> {
        ensure_dim("GaussianLikelihood noise", model.dim_out(), noise.dim())?;
        ensure_dim("GaussianLikelihood data", model.dim_out(), data.len())?;
        ensure_finite(&data, "GaussianLikelihood data")?;
        let m = model.dim_out() as f64;
        let norm_const = -0.5 * (m * (2.0 * std::f64::consts::PI).ln() + noise.ln_det());
        Ok(Self {
            model,
            noise,
            data,
            norm_const,
        })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn noise(&self) -> &SpdMatrix {
        &self.noise
    }

    pub fn data(&self) -> &DVector<f64> {
        &self.data
    }

    /// Replaces the observed data record, keeping model and noise.
    pub fn with_data(&self, data: DVector<f64>) -> Result<Self>
    where
        M: Clone,
    {
        Self::new(self.model.clone(), SpdMatrix::new(self.noise.matrix().clone())?, data)
    }

    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let g = self.model.apply(x)?;
        ensure_finite(&g, "GaussianLikelihood forward output")?;
        Ok(g - &self.data)
    }
}

impl<M: ForwardModel> LikelihoodModel for GaussianLikelihood<M> {
    fn dim(&self) -> usize {
        self.model.dim_in()
    }

    fn dim_obs(&self) -> usize {
        self.model.dim_out()
    }

    fn log_likelihood(&self, x: &DVector<f64>) -> Result<f64> {
        let r = self.residual(x)?;
        Ok(-0.5 * self.noise.inv_quad(&r) + self.norm_const)
    }

    fn grad_log_likelihood(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let r = self.residual(x)?;
        let weighted = self.noise.solve(&r);
        Ok(-self.model.jacobian_t_apply(x, &weighted)?)
    }

    /// `∇G(x)ᵀ Σ_obs⁻¹ ∇G(x)`.
    fn fisher(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let j = self.model.jacobian(x)?;
        let wj = self.noise.solve_matrix(&j);
        Ok(j.transpose() * wj)
    }

    fn simulate(&self, x: &DVector<f64>, rng: &mut dyn Rng) -> Result<DVector<f64>> {
        let g = self.model.apply(x)?;
        ensure_finite(&g, "GaussianLikelihood forward output")?;
        let z = DVector::from_fn(self.dim_obs(), |_, _| {
            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut *rng)
        });
        Ok(g + self.noise.factor_mul(&z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LinearModel;
    use crate::rng::seeded;
    use approx::assert_relative_eq;

    fn toy() -> GaussianLikelihood<LinearModel> {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.5, 0.0, -0.3, 1.0, 2.0]);
        let noise =
            SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3])).unwrap();
        let data = DVector::from_vec(vec![0.7, -0.4]);
        GaussianLikelihood::new(LinearModel::new(a), noise, data).unwrap()
    }

    #[test]
    fn log_likelihood_matches_hand_formula() {
        let lik = toy();
        let x = DVector::from_vec(vec![0.2, -0.6, 0.9]);
        let g = lik.model().apply(&x).unwrap();
        let r = &g - lik.data();
        // 2x2 inverse written out by hand.
        let (s00, s01, s11) = (0.5, 0.1, 0.3);
        let det = s00 * s11 - s01 * s01;
        let quad = (s11 * r[0] * r[0] - 2.0 * s01 * r[0] * r[1] + s00 * r[1] * r[1]) / det;
        let expect = -0.5 * quad - (2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln();
        assert_relative_eq!(lik.log_likelihood(&x).unwrap(), expect, epsilon = 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let lik = toy();
        let x = DVector::from_vec(vec![-0.1, 0.4, 0.3]);
        let grad = lik.grad_log_likelihood(&x).unwrap();
        let fd = lis_testkit::fd::gradient(|v| lik.log_likelihood(v).unwrap(), &x, 1e-6);
        assert_relative_eq!(grad, fd, epsilon = 1e-6);
    }

    #[test]
    fn fisher_matches_score_covariance() {
        // Monte-Carlo oracle: E_y[s sᵀ] over fresh data records, with the
        // score of each record computed from the density formula directly.
        let lik = toy();
        let x = DVector::from_vec(vec![0.3, 0.1, -0.2]);
        let fisher = lik.fisher(&x).unwrap();

        let mut rng = seeded(31);
        let n = 40_000;
        let mut acc = DMatrix::zeros(3, 3);
        for _ in 0..n {
            let y = lik.simulate(&x, &mut rng).unwrap();
            let fresh = lik.with_data(y).unwrap();
            let score = fresh.grad_log_likelihood(&x).unwrap();
            acc += &score * score.transpose();
        }
        acc /= n as f64;
        let scale = fisher.amax();
        assert!(
            (acc - &fisher).amax() < 0.05 * scale,
            "MC score covariance deviates from Fisher"
        );
    }

    #[test]
    fn fisher_for_linear_model_is_constant() {
        let lik = toy();
        let f0 = lik.fisher(&DVector::zeros(3)).unwrap();
        let f1 = lik.fisher(&DVector::from_vec(vec![5.0, -2.0, 1.0])).unwrap();
        assert_relative_eq!(f0, f1, epsilon = 1e-12);
        let a = lik.model().matrix().clone();
        let expect = a.transpose() * lik.noise().solve_matrix(&a);
        assert_relative_eq!(f0, expect, epsilon = 1e-12);
    }

    #[test]
    fn simulate_moments() {
        let lik = toy();
        let x = DVector::from_vec(vec![0.2, 0.2, 0.2]);
        let g = lik.model().apply(&x).unwrap();
        let mut rng = seeded(8);
        let n = 40_000;
        let mut mean = DVector::zeros(2);
        let mut cov = DMatrix::zeros(2, 2);
        for _ in 0..n {
            let y = lik.simulate(&x, &mut rng).unwrap();
            mean += &y;
            cov += &y * y.transpose();
        }
        mean /= n as f64;
        cov = cov / n as f64 - &mean * mean.transpose();
        assert!((&mean - g).amax() < 0.02);
        assert!((cov - lik.noise().matrix()).amax() < 0.02);
    }
}
