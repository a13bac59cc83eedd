//! Likelihood reparametrized through a componentwise normalization map.
//!
//! Wrapping a likelihood `x ↦ log p(y|x)` with `x = T(z)` yields the
//! `z`-space likelihood `log p(y|T(z))` whose Fisher information is the
//! pullback `∇T(z)ᵀ 𝓘(T(z)) ∇T(z)`. Combined with a standard normal prior
//! on `z` this is how non-Gaussian product priors are run through the
//! Gaussian subspace machinery.

use crate::priors::NormalizationMap;
use crate::Result;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{ensure_dim, LikelihoodModel};

pub struct TransformedLikelihood<L> {
    inner: L,
    map: NormalizationMap,
}

impl<L: LikelihoodModel> TransformedLikelihood<L> {
    pub fn new(inner: L, map: NormalizationMap) -> Result<Self> {
        ensure_dim("TransformedLikelihood map", inner.dim(), map.dim())?;
        Ok(Self { inner, map })
    }

    pub fn inner(&self) -> &L {
        &self.inner
    }

    pub fn map(&self) -> &NormalizationMap {
        &self.map
    }
}

impl<L: LikelihoodModel> LikelihoodModel for TransformedLikelihood<L> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn dim_obs(&self) -> usize {
        self.inner.dim_obs()
    }

    fn log_likelihood(&self, z: &DVector<f64>) -> Result<f64> {
        self.inner.log_likelihood(&self.map.forward(z))
    }

    fn grad_log_likelihood(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let x = self.map.forward(z);
        let grad_x = self.inner.grad_log_likelihood(&x)?;
        Ok(grad_x.component_mul(&self.map.jacobian_diag(z)))
    }

    fn fisher(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        let x = self.map.forward(z);
        let d = self.map.jacobian_diag(z);
        let f = self.inner.fisher(&x)?;
        let n = f.nrows();
        Ok(DMatrix::from_fn(n, n, |i, j| d[i] * f[(i, j)] * d[j]))
    }

    fn simulate(&self, z: &DVector<f64>, rng: &mut dyn Rng) -> Result<DVector<f64>> {
        self.inner.simulate(&self.map.forward(z), rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SpdMatrix;
    use crate::models::{GaussianLikelihood, LinearModel};
    use approx::assert_relative_eq;

    fn inner() -> GaussianLikelihood<LinearModel> {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, -0.3, 1.2]);
        let noise = SpdMatrix::from_diagonal(&DVector::from_vec(vec![0.2, 0.5])).unwrap();
        GaussianLikelihood::new(LinearModel::new(a), noise, DVector::from_vec(vec![0.5, -0.1]))
            .unwrap()
    }

    #[test]
    fn identity_map_changes_nothing() {
        // GG(2, 1/2) is standard normal, so T is the identity.
        let map = NormalizationMap::iid(2, 2.0, 0.5).unwrap();
        let lik = TransformedLikelihood::new(inner(), map).unwrap();
        let z = DVector::from_vec(vec![0.7, -1.2]);
        assert_relative_eq!(
            lik.log_likelihood(&z).unwrap(),
            inner().log_likelihood(&z).unwrap(),
            epsilon = 1e-7
        );
        assert_relative_eq!(
            lik.fisher(&z).unwrap(),
            inner().fisher(&z).unwrap(),
            epsilon = 1e-6
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let map = NormalizationMap::iid(2, 1.4, 0.9).unwrap();
        let lik = TransformedLikelihood::new(inner(), map).unwrap();
        let z = DVector::from_vec(vec![0.3, -0.8]);
        let grad = lik.grad_log_likelihood(&z).unwrap();
        let fd = lis_testkit::fd::gradient(|v| lik.log_likelihood(v).unwrap(), &z, 1e-6);
        assert_relative_eq!(grad, fd, epsilon = 1e-5, max_relative = 1e-5);
    }

    #[test]
    fn fisher_is_the_jacobian_pullback() {
        let map = NormalizationMap::iid(2, 1.4, 0.9).unwrap();
        let lik = TransformedLikelihood::new(inner(), map.clone()).unwrap();
        let z = DVector::from_vec(vec![0.6, 1.1]);
        let d = map.jacobian_diag(&z);
        let f_inner = inner().fisher(&map.forward(&z)).unwrap();
        let dmat = DMatrix::from_diagonal(&d);
        let expect = &dmat * f_inner * &dmat;
        assert_relative_eq!(lik.fisher(&z).unwrap(), expect, epsilon = 1e-12);
    }
}
