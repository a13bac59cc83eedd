use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

use super::GeneralizedEigenPairs;

/// Rank-r projector `P = V Wᵀ` with `Wᵀ V = I_r`.
///
/// `Im(P)` (spanned by the columns of `V`) carries the informed directions;
/// `Ker(P)` is the complement the data barely touch. Built either from the
/// leading generalized eigenvectors (then `W = Γ V` and the split is
/// Γ-orthogonal) or from a coordinate index set (then `V = W` = canonical
/// columns).
#[derive(Clone, Debug)]
pub struct RankRProjector {
    basis: DMatrix<f64>,   // V, d×r
    cobasis: DMatrix<f64>, // W, d×r
    coords: Option<Vec<usize>>,
}

impl RankRProjector {
    /// Leading-`rank` eigenvector projector from a generalized eigensolve
    /// against the metric `gamma` (the same Γ passed to the eigensolver);
    /// sets `W = Γ V_r`.
    pub fn from_pairs(
        pairs: &GeneralizedEigenPairs,
        gamma: &super::SpdMatrix,
        rank: usize,
    ) -> Result<Self> {
        let d = pairs.dim();
        if rank == 0 || rank > d {
            return Err(Error::RankOutOfRange { rank, dim: d });
        }
        let basis = pairs.eigenvectors.columns(0, rank).into_owned();
        let cobasis = gamma.matrix() * &basis;
        Self::from_parts(basis, cobasis)
    }

    /// Coordinate projector onto the given (distinct, in-range) indices.
    pub fn coordinate(dim: usize, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidIndexSet {
                reason: "empty index set".into(),
            });
        }
        if indices.len() > dim {
            return Err(Error::RankOutOfRange {
                rank: indices.len(),
                dim,
            });
        }
        let mut seen = vec![false; dim];
        for &i in indices {
            if i >= dim {
                return Err(Error::InvalidIndexSet {
                    reason: format!("index {i} out of range for dimension {dim}"),
                });
            }
            if seen[i] {
                return Err(Error::InvalidIndexSet {
                    reason: format!("duplicate index {i}"),
                });
            }
            seen[i] = true;
        }
        let r = indices.len();
        let mut basis = DMatrix::zeros(dim, r);
        for (k, &i) in indices.iter().enumerate() {
            basis[(i, k)] = 1.0;
        }
        Ok(Self {
            cobasis: basis.clone(),
            basis,
            coords: Some(indices.to_vec()),
        })
    }

    /// Rebuilds a projector from stored basis/cobasis (e.g. loaded from
    /// disk), validating bi-orthogonality `Wᵀ V = I_r`, without which `P`
    /// would not be idempotent.
    pub fn from_parts(basis: DMatrix<f64>, cobasis: DMatrix<f64>) -> Result<Self> {
        let (d, r) = (basis.nrows(), basis.ncols());
        if cobasis.nrows() != d || cobasis.ncols() != r {
            return Err(Error::DimensionMismatch {
                context: "projector basis vs cobasis",
                expected: d * r,
                got: cobasis.nrows() * cobasis.ncols(),
            });
        }
        if r == 0 || r > d {
            return Err(Error::RankOutOfRange { rank: r, dim: d });
        }
        let gram = cobasis.transpose() * &basis;
        let dev = (&gram - DMatrix::identity(r, r)).amax();
        if dev > 1e-8 {
            return Err(Error::InvalidParameter {
                reason: format!("WᵀV deviates from identity by {dev:e}"),
            });
        }
        // Detect a coordinate projector so product priors can factorize.
        let coords = coordinate_indices(&basis, &cobasis);
        Ok(Self {
            basis,
            cobasis,
            coords,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Columns of `V` (spans the informed subspace).
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Columns of `W` (`P = V Wᵀ`).
    pub fn cobasis(&self) -> &DMatrix<f64> {
        &self.cobasis
    }

    /// The index set if this is a coordinate projector.
    pub fn coordinates(&self) -> Option<&[usize]> {
        self.coords.as_deref()
    }

    /// `P x`.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.cobasis.tr_mul(x))
    }

    /// Splits `x` into `(P x, x − P x)`; the parts recombine exactly.
    pub fn split(&self, x: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let xr = self.apply(x);
        let xp = x - &xr;
        (xr, xp)
    }

    /// Subspace coefficients `α = Wᵀ x`, so that `P x = V α`.
    pub fn coefficients(&self, x: &DVector<f64>) -> DVector<f64> {
        self.cobasis.tr_mul(x)
    }

    /// Embeds coefficients back: `V α ∈ Im(P)`.
    pub fn embed(&self, alpha: &DVector<f64>) -> DVector<f64> {
        &self.basis * alpha
    }

    /// Relative distance of `x` from `Im(P)`.
    pub fn range_residual(&self, x: &DVector<f64>) -> f64 {
        (self.apply(x) - x).norm() / (1.0 + x.norm())
    }

    /// Dense `P` (tests and small problems only).
    pub fn to_dense(&self) -> DMatrix<f64> {
        &self.basis * self.cobasis.transpose()
    }
}

fn coordinate_indices(basis: &DMatrix<f64>, cobasis: &DMatrix<f64>) -> Option<Vec<usize>> {
    let (d, r) = (basis.nrows(), basis.ncols());
    let mut idx = Vec::with_capacity(r);
    for k in 0..r {
        let mut hot = None;
        for i in 0..d {
            let (b, w) = (basis[(i, k)], cobasis[(i, k)]);
            if b == 0.0 && w == 0.0 {
                continue;
            }
            if b == 1.0 && w == 1.0 && hot.is_none() {
                hot = Some(i);
            } else {
                return None;
            }
        }
        idx.push(hot?);
    }
    Some(idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{generalized_eig, SpdMatrix};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::RngExt;

    fn eig_projector(d: usize, r: usize, seed: u64) -> (RankRProjector, SpdMatrix) {
        let mut rng = crate::rng::seeded(seed);
        let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let h = &a * a.transpose();
        let b = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let gamma = SpdMatrix::new(&b * b.transpose() + DMatrix::identity(d, d)).unwrap();
        let pairs = generalized_eig(&h, &gamma).unwrap();
        let p = RankRProjector::from_pairs(&pairs, &gamma, r).unwrap();
        (p, gamma)
    }

    #[test]
    fn idempotent_and_exact_split() {
        let (p, _) = eig_projector(6, 3, 21);
        let mut rng = crate::rng::seeded(22);
        let x = DVector::from_fn(6, |_, _| rng.random_range(-2.0..2.0));
        let px = p.apply(&x);
        assert_relative_eq!(p.apply(&px), px, epsilon = 1e-10);
        let (xr, xp) = p.split(&x);
        assert_relative_eq!(&xr + &xp, x, epsilon = 1e-14);
        // Complement is Γ-orthogonal to the informed basis.
        let (p, gamma) = eig_projector(6, 3, 23);
        let (_, xp) = p.split(&x);
        let cross = p.basis().tr_mul(&gamma.mul(&xp));
        assert!(cross.amax() < 1e-9);
    }

    #[test]
    fn coefficients_embed_round_trip() {
        let (p, _) = eig_projector(5, 2, 31);
        let mut rng = crate::rng::seeded(32);
        let x = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
        let alpha = p.coefficients(&x);
        assert_relative_eq!(p.embed(&alpha), p.apply(&x), epsilon = 1e-12);
        // Coefficients of an embedded vector come back unchanged.
        let xr = p.embed(&alpha);
        assert_relative_eq!(p.coefficients(&xr), alpha, epsilon = 1e-10);
    }

    #[test]
    fn coordinate_projector_validation() {
        assert!(RankRProjector::coordinate(4, &[]).is_err());
        assert!(RankRProjector::coordinate(4, &[4]).is_err());
        assert!(RankRProjector::coordinate(4, &[1, 1]).is_err());
        let p = RankRProjector::coordinate(4, &[2, 0]).unwrap();
        assert_eq!(p.coordinates(), Some(&[2usize, 0][..]));
        let x = DVector::from_row_slice(&[1.0, 2.0, 3.0, 4.0]);
        let px = p.apply(&x);
        assert_eq!(px.as_slice(), &[1.0, 0.0, 3.0, 0.0]);
        assert_eq!(p.coefficients(&x).as_slice(), &[3.0, 1.0]);
    }

    #[test]
    fn from_parts_rejects_non_biorthogonal() {
        let v = DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let w = DMatrix::from_row_slice(3, 1, &[2.0, 0.0, 0.0]);
        assert!(RankRProjector::from_parts(v, w).is_err());
    }

    proptest! {
        #[test]
        fn prop_idempotent(seed in 0u64..500, d in 2usize..7, x_seed in 0u64..100) {
            let d = d.max(2);
            let r = 1 + (seed as usize) % d;
            let (p, _) = eig_projector(d, r, seed);
            let mut rng = crate::rng::seeded(x_seed);
            let x = DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
            let px = p.apply(&x);
            let ppx = p.apply(&px);
            prop_assert!((&ppx - &px).amax() < 1e-9 * (1.0 + px.amax()));
            let (xr, xp) = p.split(&x);
            prop_assert!((&xr + &xp - &x).amax() < 1e-13 * (1.0 + x.amax()));
        }
    }
}
