//! Closed-form linear-Gaussian posterior: prior N(m, Σ_pr), data
//! `y = A x + ε`, `ε ~ N(0, Σ_obs)`. The reference against which exact
//! samplers are judged.

use nalgebra::{DMatrix, DVector};

pub struct LinearGaussianPosterior {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

pub fn posterior(
    a: &DMatrix<f64>,
    sigma_obs: &DMatrix<f64>,
    prior_mean: &DVector<f64>,
    prior_cov: &DMatrix<f64>,
    y: &DVector<f64>,
) -> LinearGaussianPosterior {
    let obs_inv = sigma_obs.clone().try_inverse().expect("Σ_obs invertible");
    let pr_inv = prior_cov.clone().try_inverse().expect("Σ_pr invertible");
    let precision = &pr_inv + a.transpose() * &obs_inv * a;
    let cov = precision.try_inverse().expect("posterior precision invertible");
    let mean = &cov * (a.transpose() * &obs_inv * y + &pr_inv * prior_mean);
    LinearGaussianPosterior { mean, cov }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn scalar_case_matches_textbook() {
        // Prior N(0,1), y = x + ε with ε ~ N(0,1): posterior N(y/2, 1/2).
        let a = DMatrix::identity(1, 1);
        let s = DMatrix::identity(1, 1);
        let post = posterior(
            &a,
            &s,
            &DVector::zeros(1),
            &DMatrix::identity(1, 1),
            &DVector::from_row_slice(&[2.0]),
        );
        assert_relative_eq!(post.mean[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(post.cov[(0, 0)], 0.5, epsilon = 1e-12);
    }
}
