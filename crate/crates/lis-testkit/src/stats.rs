//! Empirical statistics used when tests compare stochastic output against a
//! reference: batch-means standard errors (valid under autocorrelation),
//! Kolmogorov-Smirnov distances, and an AR(1) generator with known
//! autocorrelation time.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Mean and its standard error from non-overlapping batch means; the batches
/// must be long relative to the autocorrelation time of the series.
pub fn batch_means_se(xs: &[f64], n_batches: usize) -> (f64, f64) {
    assert!(n_batches >= 2 && xs.len() >= 2 * n_batches);
    let bl = xs.len() / n_batches;
    let batches: Vec<f64> = (0..n_batches)
        .map(|b| mean(&xs[b * bl..(b + 1) * bl]))
        .collect();
    let m = mean(&batches);
    let se = (variance(&batches) / n_batches as f64).sqrt();
    (m, se)
}

/// One-sample KS statistic `sup |F̂(x) − F(x)|`.
pub fn ks_one_sample(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// KS critical value at significance 0.01 for one sample of size `n`
/// (asymptotic Kolmogorov distribution).
pub fn ks_critical_one_sample_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// KS critical value at significance 0.01 for two samples.
pub fn ks_critical_two_sample_1pct(n: usize, m: usize) -> f64 {
    1.6276 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Assigns each value to one of three bins split at the empirical terciles.
pub fn tercile_bins(series: &[f64]) -> Vec<usize> {
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let c1 = sorted[series.len() / 3];
    let c2 = sorted[2 * series.len() / 3];
    series
        .iter()
        .map(|&x| if x < c1 { 0 } else if x < c2 { 1 } else { 2 })
        .collect()
}

/// Discretized-reversibility statistic. For a stationary reversible chain the
/// lumped flow between any two bins is symmetric, so the transition counts
/// satisfy `N_ij ≈ N_ji`; returns the largest `|N_ij − N_ji| / √(N_ij + N_ji)`
/// over unordered bin pairs, an approximate z-score.
pub fn flow_asymmetry_z(bins: &[usize], n_bins: usize) -> f64 {
    let mut counts = vec![0f64; n_bins * n_bins];
    for w in bins.windows(2) {
        counts[w[0] * n_bins + w[1]] += 1.0;
    }
    let mut worst = 0.0f64;
    for i in 0..n_bins {
        for j in (i + 1)..n_bins {
            let (nij, nji) = (counts[i * n_bins + j], counts[j * n_bins + i]);
            if nij + nji > 0.0 {
                worst = worst.max((nij - nji).abs() / (nij + nji).sqrt());
            }
        }
    }
    worst
}

/// Stationary AR(1) series `x_t = ρ x_{t−1} + ε_t`, `ε ~ N(0,1)`, started in
/// stationarity. Its integrated autocorrelation time is `(1+ρ)/(1−ρ)`.
pub fn ar1_series(rho: f64, n: usize, seed: u64) -> Vec<f64> {
    assert!(rho.abs() < 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    let s0 = (1.0 / (1.0 - rho * rho)).sqrt();
    x[0] = s0 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
    for t in 1..n {
        x[t] = rho * x[t - 1] + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngExt;

    #[test]
    fn batch_means_recovers_iid_se() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let (m, se) = batch_means_se(&xs, 100);
        assert!(m.abs() < 4.0 * se);
        let iid_se = (1.0 / xs.len() as f64).sqrt();
        assert!((se / iid_se - 1.0).abs() < 0.35, "se {se} vs iid {iid_se}");
    }

    #[test]
    fn flow_asymmetry_separates_reversible_from_cyclic() {
        // Gaussian AR(1) is reversible: lumped flows balance.
        let xs = ar1_series(0.5, 200_000, 9);
        let z = flow_asymmetry_z(&tercile_bins(&xs), 3);
        assert!(z < 3.0, "reversible chain flagged: z = {z}");
        // A deterministic 0→1→2→0 cycle is maximally irreversible.
        let cyc: Vec<usize> = (0..3000).map(|t| t % 3).collect();
        assert!(flow_asymmetry_z(&cyc, 3) > 10.0);
    }

    #[test]
    fn ks_accepts_matching_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut xs: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        let d = ks_one_sample(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!(d < ks_critical_one_sample_1pct(20_000));
    }

    #[test]
    fn ks_rejects_shifted_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut xs: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>() + 0.05).collect();
        let d = ks_one_sample(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!(d > ks_critical_one_sample_1pct(20_000));
    }

    #[test]
    fn ar1_has_expected_moments() {
        let xs = ar1_series(0.5, 200_000, 8);
        let var_target = 1.0 / (1.0 - 0.25);
        assert!((variance(&xs) / var_target - 1.0).abs() < 0.05);
    }
}
