use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Symmetric positive definite matrix in lower-band storage.
///
/// Row `i` holds entries `A[i, i-bw ..= i]`; the five-point grid operators
/// used by the built-in problems have bandwidth equal to the grid side, so a
/// factor-and-solve costs O(n·bw²) instead of the dense O(n³). This is what
/// keeps 1e5-step chains on a 32×32 mesh affordable.
#[derive(Clone)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bw: bandwidth,
            band: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Adds `v` to `A[i,j]` (and by symmetry `A[j,i]`).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i < self.n && i - j <= self.bw, "entry outside band");
        let k = self.idx(i, j);
        self.band[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.band[self.idx(i, j)]
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let jmin = i.saturating_sub(self.bw);
            for j in jmin..=i {
                let a = self.band[self.idx(i, j)];
                y[i] += a * x[j];
                if j < i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// In-place band Cholesky. Fails with the offending pivot index if the
    /// matrix is not positive definite.
    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut l = self.band.clone();
        for i in 0..n {
            let jmin = i.saturating_sub(bw);
            for j in jmin..=i {
                let kmin = jmin.max(j.saturating_sub(bw));
                // Offsets of column kmin in rows i and j of the band.
                let oi = i * w + (kmin + bw - i);
                let oj = j * w + (kmin + bw - j);
                let len = j - kmin;
                let mut s = 0.0;
                for t in 0..len {
                    s += l[oi + t] * l[oj + t];
                }
                let pos = i * w + (j + bw - i);
                if j < i {
                    l[pos] = (l[pos] - s) / l[j * w + bw];
                } else {
                    let d = l[pos] - s;
                    if !(d > 0.0) || !d.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: i });
                    }
                    l[pos] = d.sqrt();
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }
}

/// Lower Cholesky factor of a [`BandedSpd`], in the same band layout.
#[derive(Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place (forward then back substitution).
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let jmin = i.saturating_sub(bw);
            let off = i * w + (jmin + bw - i);
            let mut s = b[i];
            for (t, bj) in b[jmin..i].iter().enumerate() {
                s -= self.l[off + t] * bj;
            }
            b[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let jmax = (i + bw).min(n - 1);
            let mut s = b[i];
            for j in (i + 1)..=jmax {
                s -= self.l[j * w + (i + bw - j)] * b[j];
            }
            b[i] = s / self.l[i * w + bw];
        }
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x: Vec<f64> = b.iter().copied().collect();
        self.solve_in_place(&mut x);
        DVector::from_vec(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_dense(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(b.nrows(), self.n);
        let mut out = b.clone();
        let mut col = vec![0.0; self.n];
        for j in 0..b.ncols() {
            for i in 0..self.n {
                col[i] = b[(i, j)];
            }
            self.solve_in_place(&mut col);
            for i in 0..self.n {
                out[(i, j)] = col[i];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SpdMatrix;
    use approx::assert_relative_eq;
    use rand::RngExt;

    fn random_banded(n: usize, bw: usize, seed: u64) -> BandedSpd {
        let mut rng = crate::rng::seeded(seed);
        let mut a = BandedSpd::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                a.add(i, j, rng.random_range(-0.5..0.5));
            }
            // Diagonal dominance keeps it safely SPD.
            a.add(i, i, bw as f64 + rng.random_range(1.0..2.0));
        }
        a
    }

    #[test]
    fn solve_matches_dense_cholesky() {
        let a = random_banded(40, 7, 1);
        let dense = SpdMatrix::new(a.to_dense()).unwrap();
        let chol = a.cholesky().unwrap();
        let mut rng = crate::rng::seeded(2);
        let b = DVector::from_fn(40, |_, _| rng.random_range(-1.0..1.0));
        assert_relative_eq!(chol.solve(&b), dense.solve(&b), epsilon = 1e-10);
    }

    #[test]
    fn matvec_round_trip() {
        let a = random_banded(25, 4, 3);
        let chol = a.cholesky().unwrap();
        let x: Vec<f64> = (0..25).map(|i| (0.7 * i as f64).sin()).collect();
        let y = a.matvec(&x);
        let x2 = chol.solve(&DVector::from_vec(y));
        for i in 0..25 {
            assert_relative_eq!(x2[i], x[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn indefinite_reports_pivot() {
        let mut a = BandedSpd::zeros(3, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, -1.0);
        a.add(2, 2, 1.0);
        match a.cholesky() {
            Err(Error::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected failure, got {:?}", other.map(|_| ())),
        }
    }
}
