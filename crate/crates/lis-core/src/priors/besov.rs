//! Weighted Haar wavelet expansions.
//!
//! A wavelet-expansion prior places i.i.d. generalized-Gaussian coefficients
//! on an orthonormal multiresolution basis whose level-`j` vectors are scaled
//! by `2^{-j(s + 1/2 - 1/p)}`; smoother fields come from larger smoothness
//! `s`, heavier-tailed coefficient laws from smaller integrability `p`. This
//! module builds the (dense) synthesis matrix `B` of that expansion on dyadic
//! grids, so a coefficient vector `z` maps to grid values `u = Bz`.

use crate::{Error, Result};
use nalgebra::DMatrix;

/// Synthesis operator of a weighted Haar expansion on a dyadic grid.
#[derive(Debug, Clone)]
pub struct BesovExpansion {
    matrix: DMatrix<f64>,
    levels: usize,
    smoothness: f64,
    integrability: f64,
}

impl BesovExpansion {
    /// 1-D expansion on `n = 2^levels` grid points over the unit interval.
    ///
    /// Columns are the orthonormal discrete Haar vectors — one scaling vector
    /// plus `2^j` detail vectors per level `j = 0..levels` — scaled by the
    /// level weight `2^{-j(s + 1/2 - 1/p)}` (weight 1 for the scaling
    /// vector).
    pub fn new_1d(levels: usize, smoothness: f64, integrability: f64) -> Result<Self> {
        validate(levels, smoothness, integrability)?;
        let n = 1usize << levels;
        let decay = smoothness + 0.5 - 1.0 / integrability;
        let mut b = DMatrix::zeros(n, n);
        // Scaling vector: constant with unit Euclidean norm.
        let scale_val = 1.0 / (n as f64).sqrt();
        for row in 0..n {
            b[(row, 0)] = scale_val;
        }
        let mut col = 1;
        for j in 0..levels {
            let weight = 2f64.powf(-(j as f64) * decay);
            let blocks = 1usize << j; // translates at this level
            let support = n / blocks;
            let half = support / 2;
            let amp = ((blocks as f64) / (n as f64)).sqrt();
            for k in 0..blocks {
                let start = k * support;
                for t in 0..half {
                    b[(start + t, col)] = weight * amp;
                    b[(start + half + t, col)] = -weight * amp;
                }
                col += 1;
            }
        }
        debug_assert_eq!(col, n);
        Ok(Self {
            matrix: b,
            levels,
            smoothness,
            integrability,
        })
    }

    /// Separable 2-D expansion on an `n × n` grid (`n = 2^levels`): the
    /// Kronecker product of two 1-D expansions, acting on fields stored in
    /// column-major grid order.
    pub fn new_2d(levels: usize, smoothness: f64, integrability: f64) -> Result<Self> {
        let one_d = Self::new_1d(levels, smoothness, integrability)?;
        let matrix = one_d.matrix.kronecker(&one_d.matrix);
        Ok(Self {
            matrix,
            levels,
            smoothness,
            integrability,
        })
    }

    /// Number of coefficients (equals the number of grid points).
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn integrability(&self) -> f64 {
        self.integrability
    }

    /// The synthesis matrix `B`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Grid values `Bz` of the field with coefficients `z`.
    pub fn synthesize(&self, z: &nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
        &self.matrix * z
    }
}

fn validate(levels: usize, smoothness: f64, integrability: f64) -> Result<()> {
    if levels == 0 || levels > 24 {
        return Err(Error::InvalidParameter {
            reason: format!("expansion levels must be in 1..=24, got {levels}"),
        });
    }
    if !(smoothness.is_finite() && smoothness > 0.0) {
        return Err(Error::InvalidParameter {
            reason: format!("smoothness must be positive, got {smoothness}"),
        });
    }
    if !(integrability.is_finite() && integrability >= 1.0) {
        return Err(Error::InvalidParameter {
            reason: format!("integrability must satisfy p >= 1, got {integrability}"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn columns_are_orthogonal_with_level_weights() {
        let exp = BesovExpansion::new_1d(3, 2.0, 1.0).unwrap();
        let b = exp.matrix();
        assert_eq!(b.nrows(), 8);
        let gram = b.transpose() * b;
        // Level weights: scaling 1, then per-level 2^{-1.5 j}.
        let mut expect = vec![1.0];
        for j in 0..3 {
            let w = 2f64.powf(-1.5 * j as f64);
            for _ in 0..(1 << j) {
                expect.push(w * w);
            }
        }
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { expect[i] } else { 0.0 };
                assert_relative_eq!(gram[(i, j)], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn unweighted_basis_is_the_orthonormal_haar_matrix() {
        // With s + 1/2 - 1/p = 0 every weight is 1 and B must be orthogonal.
        let exp = BesovExpansion::new_1d(2, 0.5, 1.0).unwrap();
        let b = exp.matrix();
        let gram = b.transpose() * b;
        assert_relative_eq!(gram, DMatrix::identity(4, 4), epsilon = 1e-12);
        // Hand-checked 4-point Haar vectors.
        let h = 0.5;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let expect = DMatrix::from_row_slice(
            4,
            4,
            &[
                h, h, r, 0.0, //
                h, h, -r, 0.0, //
                h, -h, 0.0, r, //
                h, -h, 0.0, -r,
            ],
        );
        assert_relative_eq!(*b, expect, epsilon = 1e-12);
    }

    #[test]
    fn finest_level_vectors_have_two_point_support() {
        let exp = BesovExpansion::new_1d(4, 2.0, 1.0).unwrap();
        let b = exp.matrix();
        let n = 16;
        for col in n / 2..n {
            let nonzero = b.column(col).iter().filter(|v| **v != 0.0).count();
            assert_eq!(nonzero, 2);
        }
    }

    #[test]
    fn two_d_expansion_is_kronecker_product() {
        let exp2 = BesovExpansion::new_2d(2, 2.0, 1.0).unwrap();
        assert_eq!(exp2.dim(), 16);
        let exp1 = BesovExpansion::new_1d(2, 2.0, 1.0).unwrap();
        let kron = exp1.matrix().kronecker(exp1.matrix());
        assert_relative_eq!(*exp2.matrix(), kron, epsilon = 1e-14);
        // Column norms are products of the 1-D level weights.
        let g1 = exp1.matrix().transpose() * exp1.matrix();
        for a in 0..4 {
            for b in 0..4 {
                let col = a * 4 + b;
                let norm2 = exp2.matrix().column(col).norm_squared();
                assert_relative_eq!(norm2, g1[(a, a)] * g1[(b, b)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn constant_coefficient_gives_constant_field() {
        let exp = BesovExpansion::new_1d(3, 1.5, 1.5).unwrap();
        let mut z = nalgebra::DVector::zeros(8);
        z[0] = 1.0;
        let u = exp.synthesize(&z);
        for v in u.iter() {
            assert_relative_eq!(*v, 1.0 / 8f64.sqrt(), epsilon = 1e-14);
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(BesovExpansion::new_1d(0, 2.0, 1.0).is_err());
        assert!(BesovExpansion::new_1d(3, -1.0, 1.0).is_err());
        assert!(BesovExpansion::new_1d(3, 2.0, 0.5).is_err());
    }
}
