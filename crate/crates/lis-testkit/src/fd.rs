//! Central finite differences, the standard independent check for hand-coded
//! gradients and Jacobians.

use nalgebra::{DMatrix, DVector};

pub fn gradient(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DVector<f64> {
    let d = x.len();
    let mut g = DVector::zeros(d);
    for i in 0..d {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(&xp) - f(&xm)) / (2.0 * h);
    }
    g
}

pub fn jacobian(
    f: impl Fn(&DVector<f64>) -> DVector<f64>,
    x: &DVector<f64>,
    h: f64,
) -> DMatrix<f64> {
    let d = x.len();
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, d);
    for i in 0..d {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        let diff = (f(&xp) - f(&xm)) / (2.0 * h);
        jac.set_column(i, &diff);
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gradient_of_quadratic() {
        let f = |x: &DVector<f64>| 0.5 * x.dot(x) + x[0] * x[1];
        let x = DVector::from_row_slice(&[1.0, -2.0]);
        let g = gradient(f, &x, 1e-6);
        assert_relative_eq!(g[0], x[0] + x[1], epsilon = 1e-8);
        assert_relative_eq!(g[1], x[1] + x[0], epsilon = 1e-8);
    }
}
