use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

use super::{checked_symmetric, SpdMatrix};

/// Eigenvalues below `RELATIVE_CLAMP × λ_max` are treated as exact zeros.
/// MC-estimated Fisher matrices are only PSD up to roundoff; tiny negative
/// tail values would otherwise poison tail sums used in error bounds.
pub const RELATIVE_CLAMP: f64 = 1e-14;

/// Solution of `H v = λ Γ v` with Γ-orthonormal eigenvectors.
pub struct GeneralizedEigenPairs {
    /// Descending; clamped so the tail is exactly zero once it falls below
    /// roundoff relative to the leading eigenvalue.
    pub eigenvalues: DVector<f64>,
    /// Column `i` is the eigenvector for `eigenvalues[i]`, normalized so that
    /// `v_iᵀ Γ v_j = δ_ij`.
    pub eigenvectors: DMatrix<f64>,
}

impl GeneralizedEigenPairs {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Tail sum `Σ_{i>r} λ_i` (0-based: eigenvalues `r..d`).
    pub fn tail_sum(&self, r: usize) -> f64 {
        self.eigenvalues.iter().skip(r).sum()
    }
}

/// Solves the generalized symmetric eigenproblem `H v = λ Γ v` by whitening:
/// with `Γ = L Lᵀ`, the matrix `L⁻¹ H L⁻ᵀ` is symmetric and shares the
/// spectrum; its orthonormal eigenvectors `u` map back to `v = L⁻ᵀ u`, which
/// makes the returned basis Γ-orthonormal without ever forming `Γ⁻¹ H`.
pub fn generalized_eig(h: &DMatrix<f64>, gamma: &SpdMatrix) -> Result<GeneralizedEigenPairs> {
    let h = checked_symmetric(h, "generalized_eig")?;
    let d = gamma.dim();
    if h.nrows() != d {
        return Err(Error::DimensionMismatch {
            context: "generalized_eig: H vs Γ",
            expected: d,
            got: h.nrows(),
        });
    }

    let l = gamma.lower();
    // W = L⁻¹ H L⁻ᵀ, computed with two triangular solves and re-symmetrized.
    let x = l
        .solve_lower_triangular(&h)
        .expect("Cholesky factor is nonsingular");
    let y = l
        .solve_lower_triangular(&x.transpose())
        .expect("Cholesky factor is nonsingular");
    let w = 0.5 * (&y + y.transpose());

    let eig = w.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
            .then(a.cmp(&b))
    });

    let lambda_max = order
        .first()
        .map(|&i| eig.eigenvalues[i].max(0.0))
        .unwrap_or(0.0);
    let clamp = RELATIVE_CLAMP * lambda_max;

    let mut values = DVector::zeros(d);
    let mut vectors = DMatrix::zeros(d, d);
    let lt = l.transpose();
    for (k, &i) in order.iter().enumerate() {
        let lam = eig.eigenvalues[i];
        values[k] = if lam <= clamp { 0.0 } else { lam };
        let u = eig.eigenvectors.column(i).into_owned();
        let mut v = lt
            .solve_upper_triangular(&u)
            .expect("Cholesky factor is nonsingular");
        // Deterministic sign: largest-magnitude entry positive.
        let mut pivot = 0;
        for j in 1..d {
            if v[j].abs() > v[pivot].abs() {
                pivot = j;
            }
        }
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(k, &v);
    }

    Ok(GeneralizedEigenPairs {
        eigenvalues: values,
        eigenvectors: vectors,
    })
}
