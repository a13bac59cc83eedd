use crate::{Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::checked_symmetric;

/// Symmetric positive definite matrix with its lower Cholesky factor.
///
/// Construction validates symmetry and factorizes eagerly; every downstream
/// use (solves, whitening, log-determinants, sampling) needs the factor, and
/// failing fast turns an indefinite covariance into an error at the place the
/// matrix was built rather than deep inside a sampler.
#[derive(Clone)]
pub struct SpdMatrix {
    mat: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    lower: DMatrix<f64>,
}

impl std::fmt::Debug for SpdMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SpdMatrix(dim={})", self.dim())
    }
}

impl SpdMatrix {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        let mat = checked_symmetric(&mat, "SpdMatrix::new")?;
        match Cholesky::new(mat.clone()) {
            Some(chol) => {
                let lower = chol.l();
                Ok(Self { mat, chol, lower })
            }
            None => Err(Error::NotPositiveDefinite {
                pivot: first_bad_pivot(&mat),
            }),
        }
    }

    pub fn from_diagonal(diag: &DVector<f64>) -> Result<Self> {
        if let Some(i) = diag.iter().position(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(Error::NotPositiveDefinite { pivot: i });
        }
        Self::new(DMatrix::from_diagonal(diag))
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Lower Cholesky factor L with `M = L Lᵀ`.
    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn ln_det(&self) -> f64 {
        2.0 * (0..self.dim())
            .map(|i| self.lower()[(i, i)].ln())
            .sum::<f64>()
    }

    pub fn mul(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.mat * v
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    /// `vᵀ M v`.
    pub fn quad(&self, v: &DVector<f64>) -> f64 {
        v.dot(&self.mul(v))
    }

    /// `vᵀ M⁻¹ v`, via one triangular solve (never forms the inverse).
    pub fn inv_quad(&self, v: &DVector<f64>) -> f64 {
        let w = self.whiten(v);
        w.norm_squared()
    }

    /// `L⁻¹ v`.
    pub fn whiten(&self, v: &DVector<f64>) -> DVector<f64> {
        self.lower()
            .solve_lower_triangular(v)
            .expect("Cholesky factor has positive diagonal")
    }

    /// `L z` (maps white noise to a draw with covariance M).
    pub fn factor_mul(&self, z: &DVector<f64>) -> DVector<f64> {
        let l = self.lower();
        let n = self.dim();
        let mut out = DVector::zeros(n);
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..=i {
                s += l[(i, j)] * z[j];
            }
            out[i] = s;
        }
        out
    }
}

/// Index of the first pivot at which a naive Cholesky breaks down; used only
/// to enrich the error message after nalgebra's factorization has failed.
fn first_bad_pivot(m: &DMatrix<f64>) -> usize {
    let n = m.nrows();
    let mut a = m.clone();
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= a[(j, k)] * a[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return j;
        }
        let d = d.sqrt();
        a[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= a[(i, k)] * a[(j, k)];
            }
            a[(i, j)] = s / d;
        }
    }
    n
}
