//! Poisson count observations: `y_i ~ Poisson(G_i(x))` independently.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Distribution;
use statrs::function::gamma::ln_gamma;

use super::{ensure_dim, ForwardModel, LikelihoodModel};

pub struct PoissonLikelihood<M> {
    model: M,
    counts: DVector<f64>,
    /// `Σ ln(y_i!)`, precomputed.
    ln_factorials: f64,
}

impl<M: ForwardModel> PoissonLikelihood<M> {
    pub fn new(model: M, counts: DVector<f64>) -> Result<Self> {
        ensure_dim("PoissonLikelihood counts", model.dim_out(), counts.len())?;
        for (i, &c) in counts.iter().enumerate() {
            if !(c.is_finite() && c >= 0.0 && c.fract() == 0.0) {
                return Err(Error::InvalidParameter {
                    reason: format!("count {i} must be a nonnegative integer, got {c}"),
                });
            }
        }
        let ln_factorials = counts.iter().map(|&c| ln_gamma(c + 1.0)).sum();
        Ok(Self {
            model,
            counts,
            ln_factorials,
        })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn counts(&self) -> &DVector<f64> {
        &self.counts
    }

    pub fn with_counts(&self, counts: DVector<f64>) -> Result<Self>
    where
        M: Clone,
    {
        Self::new(self.model.clone(), counts)
    }

    /// Forward output with the positivity the Poisson law requires.
    fn intensities(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let g = self.model.apply(x)?;
        for (i, &gi) in g.iter().enumerate() {
            if !(gi.is_finite() && gi > 0.0) {
                return Err(Error::LikelihoodDomain {
                    reason: format!("Poisson intensity {i} must be positive, got {gi}"),
                });
            }
        }
        Ok(g)
    }
}

impl<M: ForwardModel> LikelihoodModel for PoissonLikelihood<M> {
    fn dim(&self) -> usize {
        self.model.dim_in()
    }

    fn dim_obs(&self) -> usize {
        self.model.dim_out()
    }

    fn log_likelihood(&self, x: &DVector<f64>) -> Result<f64> {
        let g = self.intensities(x)?;
        let mut ll = -self.ln_factorials;
        for i in 0..g.len() {
            ll += self.counts[i] * g[i].ln() - g[i];
        }
        Ok(ll)
    }

    fn grad_log_likelihood(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let g = self.intensities(x)?;
        let w = DVector::from_fn(g.len(), |i, _| self.counts[i] / g[i] - 1.0);
        self.model.jacobian_t_apply(x, &w)
    }

    /// `∇G(x)ᵀ diag(1/G_i(x)) ∇G(x)`.
    fn fisher(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let g = self.intensities(x)?;
        let j = self.model.jacobian(x)?;
        let mut scaled = j.clone();
        for i in 0..g.len() {
            let s = 1.0 / g[i];
            scaled.row_mut(i).scale_mut(s);
        }
        Ok(j.transpose() * scaled)
    }

    fn simulate(&self, x: &DVector<f64>, rng: &mut dyn Rng) -> Result<DVector<f64>> {
        let g = self.intensities(x)?;
        let mut y = DVector::zeros(g.len());
        for i in 0..g.len() {
            let dist = rand_distr::Poisson::new(g[i]).map_err(|e| Error::InvalidParameter {
                reason: format!("Poisson intensity {}: {e}", g[i]),
            })?;
            let draw: f64 = dist.sample(&mut *rng);
            y[i] = draw;
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LinearModel;
    use crate::rng::seeded;
    use approx::assert_relative_eq;
    use statrs::distribution::Discrete;

    /// Small model with strictly positive outputs near the test points.
    fn toy() -> PoissonLikelihood<LinearModel> {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.3, 0.2, 1.5, 0.8, 0.8]);
        let model = LinearModel::with_offset(a, DVector::from_vec(vec![4.0, 6.0, 3.0])).unwrap();
        PoissonLikelihood::new(model, DVector::from_vec(vec![3.0, 8.0, 0.0])).unwrap()
    }

    #[test]
    fn log_likelihood_matches_reference_pmf() {
        let lik = toy();
        let x = DVector::from_vec(vec![0.4, -0.2]);
        let g = lik.model().apply(&x).unwrap();
        let expect: f64 = (0..3)
            .map(|i| {
                statrs::distribution::Poisson::new(g[i])
                    .unwrap()
                    .ln_pmf(lik.counts()[i] as u64)
            })
            .sum();
        assert_relative_eq!(lik.log_likelihood(&x).unwrap(), expect, epsilon = 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let lik = toy();
        let x = DVector::from_vec(vec![0.1, 0.5]);
        let grad = lik.grad_log_likelihood(&x).unwrap();
        let fd = lis_testkit::fd::gradient(|v| lik.log_likelihood(v).unwrap(), &x, 1e-6);
        assert_relative_eq!(grad, fd, epsilon = 1e-6);
    }

    #[test]
    fn fisher_matches_score_covariance() {
        let lik = toy();
        let x = DVector::from_vec(vec![0.3, 0.2]);
        let fisher = lik.fisher(&x).unwrap();
        let mut rng = seeded(17);
        let n = 60_000;
        let mut acc = DMatrix::zeros(2, 2);
        for _ in 0..n {
            let y = lik.simulate(&x, &mut rng).unwrap();
            let fresh = lik.with_counts(y).unwrap();
            let score = fresh.grad_log_likelihood(&x).unwrap();
            acc += &score * score.transpose();
        }
        acc /= n as f64;
        assert!(
            (acc - &fisher).amax() < 0.05 * fisher.amax(),
            "MC score covariance deviates from Fisher"
        );
    }

    #[test]
    fn nonpositive_intensity_is_a_domain_error() {
        let lik = toy();
        // Drive the first output negative.
        let x = DVector::from_vec(vec![-10.0, 0.0]);
        let err = lik.log_likelihood(&x).unwrap_err();
        assert!(matches!(err, Error::LikelihoodDomain { .. }));
    }

    #[test]
    fn invalid_counts_are_rejected() {
        let model = LinearModel::new(DMatrix::identity(2, 2));
        assert!(PoissonLikelihood::new(model.clone(), DVector::from_vec(vec![1.5, 2.0])).is_err());
        assert!(PoissonLikelihood::new(model, DVector::from_vec(vec![-1.0, 2.0])).is_err());
    }

    #[test]
    fn simulate_mean_and_variance() {
        let lik = toy();
        let x = DVector::from_vec(vec![0.0, 0.0]);
        let g = lik.model().apply(&x).unwrap();
        let mut rng = seeded(3);
        let n = 40_000;
        let mut mean = DVector::zeros(3);
        let mut second = DVector::zeros(3);
        for _ in 0..n {
            let y = lik.simulate(&x, &mut rng).unwrap();
            mean += &y;
            second += y.component_mul(&y);
        }
        mean /= n as f64;
        let var = second / n as f64 - mean.component_mul(&mean);
        for i in 0..3 {
            assert_relative_eq!(mean[i], g[i], max_relative = 0.03);
            assert_relative_eq!(var[i], g[i], max_relative = 0.05);
        }
    }
}
