//! Small numeric helpers shared across modules.

/// `ln Σ exp(xs)`, overflow-safe via max-shift. Returns `-inf` for an empty
/// slice (the empty sum).
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        // All -inf (zero likelihoods) or some ±inf/NaN: the shift trick
        // would produce NaN from inf - inf.
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln ((1/n) Σ exp(xs))`.
pub(crate) fn log_mean_exp(xs: &[f64]) -> f64 {
    log_sum_exp(xs) - (xs.len() as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn matches_naive_on_moderate_values() {
        let xs = [-1.0f64, 0.5, 2.0];
        let naive: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert_relative_eq!(log_sum_exp(&xs), naive, epsilon = 1e-14);
        assert_relative_eq!(log_mean_exp(&xs), naive - 3f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn survives_large_negative_inputs() {
        // Naive exponentiation would underflow every term to zero.
        let xs = [-100_000.5, -100_001.5];
        let got = log_sum_exp(&xs);
        let expect = -100_000.5 + (1.0 + (-1.0f64).exp()).ln();
        assert_relative_eq!(got, expect, epsilon = 1e-10);
    }

    #[test]
    fn shift_equivariance() {
        // Dyadic inputs plus an integer shift keep every intermediate sum
        // exact, so the combined result moves by exactly the shift.
        let xs = [-1.5, -2.25, -0.75];
        let c = 700.0;
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        assert_relative_eq!(
            log_sum_exp(&shifted),
            log_sum_exp(&xs) + c,
            epsilon = 1e-12
        );
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert_relative_eq!(log_sum_exp(&[0.3]), 0.3);
    }
}
