//! Affine forward map `G(x) = Ax + b`.

use crate::Result;
use nalgebra::{DMatrix, DVector};

use super::ForwardModel;

#[derive(Debug, Clone)]
pub struct LinearModel {
    a: DMatrix<f64>,
    offset: DVector<f64>,
}

impl LinearModel {
    pub fn new(a: DMatrix<f64>) -> Self {
        let offset = DVector::zeros(a.nrows());
        Self { a, offset }
    }

    pub fn with_offset(a: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        super::ensure_dim("LinearModel::with_offset", a.nrows(), offset.len())?;
        Ok(Self { a, offset })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

impl ForwardModel for LinearModel {
    fn dim_in(&self) -> usize {
        self.a.ncols()
    }

    fn dim_out(&self) -> usize {
        self.a.nrows()
    }

    fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        super::ensure_dim("LinearModel::apply", self.dim_in(), x.len())?;
        Ok(&self.a * x + &self.offset)
    }

    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        super::ensure_dim("LinearModel::jacobian", self.dim_in(), x.len())?;
        Ok(self.a.clone())
    }

    fn jacobian_t_apply(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        super::ensure_dim("LinearModel::jacobian_t_apply", self.dim_in(), x.len())?;
        super::ensure_dim("LinearModel adjoint direction", self.dim_out(), v.len())?;
        Ok(self.a.transpose() * v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn applies_affine_map() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, -1.0, 0.5, 3.0]);
        let model = LinearModel::with_offset(a.clone(), DVector::from_vec(vec![0.1, -0.2])).unwrap();
        let x = DVector::from_vec(vec![1.0, -1.0, 2.0]);
        let y = model.apply(&x).unwrap();
        assert_relative_eq!(y, &a * &x + DVector::from_vec(vec![0.1, -0.2]));
        assert_relative_eq!(model.jacobian(&x).unwrap(), a);
        let v = DVector::from_vec(vec![0.3, 0.7]);
        assert_relative_eq!(
            model.jacobian_t_apply(&x, &v).unwrap(),
            a.transpose() * &v
        );
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let model = LinearModel::new(DMatrix::identity(2, 2));
        assert!(model.apply(&DVector::zeros(3)).is_err());
    }
}
