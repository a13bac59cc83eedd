//! Dense and banded symmetric linear algebra used by the reduction machinery:
//! SPD matrices with cached Cholesky factors, the generalized symmetric
//! eigensolver (whitening approach), and rank-r projectors that split the
//! parameter space into informed and complement parts.

mod banded;
mod eig;
mod projector;
mod spd;

pub use banded::{BandedCholesky, BandedSpd};
pub use eig::{generalized_eig, GeneralizedEigenPairs};
pub use projector::RankRProjector;
pub use spd::SpdMatrix;

use crate::{Error, Result};
use nalgebra::DMatrix;

/// Relative symmetry tolerance for validated symmetric inputs.
pub const SYMMETRY_RTOL: f64 = 1e-12;

/// Validates `m` is square and symmetric to `SYMMETRY_RTOL` (relative to the
/// largest entry magnitude), returning a symmetrized copy so downstream
/// factorizations see an exactly symmetric matrix.
pub fn checked_symmetric(m: &DMatrix<f64>, context: &'static str) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            context,
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let mut scale: f64 = 0.0;
    let mut max_asym: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..=j {
            let a = m[(i, j)];
            let b = m[(j, i)];
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::NonFinite { context });
            }
            scale = scale.max(a.abs()).max(b.abs());
            max_asym = max_asym.max((a - b).abs());
        }
    }
    if max_asym > SYMMETRY_RTOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric { max_asym });
    }
    let mut out = m.clone();
    for j in 0..m.ncols() {
        for i in 0..j {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            out[(i, j)] = avg;
            out[(j, i)] = avg;
        }
    }
    Ok(out)
}
