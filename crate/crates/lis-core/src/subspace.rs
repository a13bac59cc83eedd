//! Construction of likelihood-informed subspaces.
//!
//! The central object is the prior-averaged Fisher information
//! `H = ∫ 𝓘(x) π_pr(dx)`, estimated by Monte Carlo over prior draws. Its
//! generalized eigenpairs against the prior metric `Γ` give the informed
//! directions; the eigenvalue tail certifies, via
//! `E[D_KL] ≤ (κ/2) Σ_{i>r} λ_i`, how much posterior information a rank-`r`
//! reduction can lose. Variants cover the posterior-averaged (data-dependent)
//! matrix, the forward-model matrix for Gaussian observations, and the
//! pullback matrix for priors handled through a normalization map.

use crate::models::{ForwardModel, GaussianLikelihood, LikelihoodModel};
use crate::priors::{NormalizationMap, Prior};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Which integral an [`HMatrixEstimate`] approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HKind {
    /// Prior-averaged Fisher information (no data involved).
    DataFree,
    /// Posterior-averaged outer products of the observed-data score.
    DataDependent,
    /// Prior-averaged Gauss-Newton matrix of a Gaussian observation model.
    ForwardModel,
    /// Data-free matrix of a transformed likelihood in normalized variables.
    Pullback,
}

impl HKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HKind::DataFree => "data_free",
            HKind::DataDependent => "data_dependent",
            HKind::ForwardModel => "forward_model",
            HKind::Pullback => "pullback",
        }
    }
}

/// Monte Carlo estimate of a sensitivity matrix `H`, with its sample count
/// and the trace of the running mean for convergence monitoring.
#[derive(Debug, Clone)]
pub struct HMatrixEstimate {
    matrix: DMatrix<f64>,
    samples: usize,
    trace_history: Vec<f64>,
    kind: HKind,
}

impl HMatrixEstimate {
    fn finish(sum: DMatrix<f64>, term_traces: Vec<f64>, kind: HKind) -> Self {
        let k = term_traces.len();
        let mut matrix = sum / k as f64;
        // Each term is symmetric up to solver roundoff; keep the mean exact.
        let t = matrix.transpose();
        matrix = (matrix + t) * 0.5;
        let mut trace_history = Vec::with_capacity(k);
        let mut acc = 0.0;
        for (i, t) in term_traces.iter().enumerate() {
            acc += t;
            trace_history.push(acc / (i + 1) as f64);
        }
        Self {
            matrix,
            samples: k,
            trace_history,
            kind,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn kind(&self) -> HKind {
        self.kind
    }

    /// Trace of the running mean after 1, 2, …, K samples.
    pub fn trace_history(&self) -> &[f64] {
        &self.trace_history
    }

    /// Whether the running trace has plateaued: every value in the last 20%
    /// of the history is within `rel_tol` (relatively) of the final trace.
    pub fn trace_converged(&self, rel_tol: f64) -> bool {
        let k = self.trace_history.len();
        let tail_start = k - (k / 5).max(1);
        let last = *self.trace_history.last().expect("nonempty history");
        let scale = last.abs().max(f64::MIN_POSITIVE);
        self.trace_history[tail_start..]
            .iter()
            .all(|t| (t - last).abs() <= rel_tol * scale)
    }
}

/// Data-free sensitivity matrix: `Ĥ = (1/K) Σ_k 𝓘(x^{(k)})`, `x^{(k)}` i.i.d.
/// prior draws. Deterministic for a fixed seed, independent of worker count.
pub fn data_free_h(
    prior: &dyn Prior,
    likelihood: &dyn LikelihoodModel,
    k: usize,
    rng: &mut dyn Rng,
) -> Result<HMatrixEstimate> {
    check_counts(prior.dim(), likelihood.dim(), k)?;
    let xs: Vec<DVector<f64>> = (0..k).map(|_| prior.sample(rng)).collect();
    let partial = reduce_terms(&xs, &|x| likelihood.fisher(x))?;
    Ok(HMatrixEstimate::finish(
        partial.sum,
        partial.traces,
        HKind::DataFree,
    ))
}

/// Posterior-averaged score matrix: `Ĥ = (1/K) Σ_k g_k g_kᵀ` with
/// `g_k = ∇ₓ log p(y | x^{(k)})` at caller-provided posterior samples. This
/// uses the observed data held by the likelihood; burn-in and thinning are
/// the caller's responsibility.
pub fn data_dependent_h(
    posterior_samples: &[DVector<f64>],
    likelihood: &dyn LikelihoodModel,
) -> Result<HMatrixEstimate> {
    if posterior_samples.is_empty() {
        return Err(Error::Empty {
            context: "data_dependent_h posterior samples",
        });
    }
    check_counts(posterior_samples[0].len(), likelihood.dim(), 1)?;
    let partial = reduce_terms(posterior_samples, &|x| {
        let g = likelihood.grad_log_likelihood(x)?;
        Ok(&g * g.transpose())
    })?;
    Ok(HMatrixEstimate::finish(
        partial.sum,
        partial.traces,
        HKind::DataDependent,
    ))
}

/// Prior-averaged forward-model matrix `∇G(x)ᵀ Σ_obs⁻¹ ∇G(x)` for Gaussian
/// observations. This coincides with the Gaussian Fisher information, so for
/// a given seed the result is bitwise equal to [`data_free_h`]; it is kept as
/// its own entry point because the reduced-forward-model pipeline is defined
/// in terms of this matrix.
pub fn forward_model_h<M: ForwardModel>(
    prior: &dyn Prior,
    likelihood: &GaussianLikelihood<M>,
    k: usize,
    rng: &mut dyn Rng,
) -> Result<HMatrixEstimate> {
    check_counts(prior.dim(), likelihood.dim(), k)?;
    let xs: Vec<DVector<f64>> = (0..k).map(|_| prior.sample(rng)).collect();
    let partial = reduce_terms(&xs, &|x| likelihood.fisher(x))?;
    Ok(HMatrixEstimate::finish(
        partial.sum,
        partial.traces,
        HKind::ForwardModel,
    ))
}

/// Data-free matrix of the normalized variable `z`: each term is
/// `∇T(z)ᵀ 𝓘(T(z)) ∇T(z)` with `z ~ N(0, I)`. The informed subspace of `z`
/// is computed against the identity metric of the standard normal reference.
pub fn pullback_h(
    map: &NormalizationMap,
    likelihood: &dyn LikelihoodModel,
    k: usize,
    rng: &mut dyn Rng,
) -> Result<HMatrixEstimate> {
    check_counts(map.dim(), likelihood.dim(), k)?;
    let d = map.dim();
    let zs: Vec<DVector<f64>> = (0..k)
        .map(|_| {
            DVector::from_fn(d, |_, _| {
                <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut *rng)
            })
        })
        .collect();
    let partial = reduce_terms(&zs, &|z| {
        let x = map.forward(z);
        let diag = map.jacobian_diag(z);
        let f = likelihood.fisher(&x)?;
        Ok(DMatrix::from_fn(d, d, |i, j| diag[i] * f[(i, j)] * diag[j]))
    })?;
    Ok(HMatrixEstimate::finish(
        partial.sum,
        partial.traces,
        HKind::Pullback,
    ))
}

fn check_counts(param_dim: usize, lik_dim: usize, k: usize) -> Result<()> {
    if param_dim != lik_dim {
        return Err(Error::DimensionMismatch {
            context: "sensitivity matrix estimate",
            expected: lik_dim,
            got: param_dim,
        });
    }
    if k < 1 {
        return Err(Error::InvalidParameter {
            reason: "sample count K must be at least 1".to_string(),
        });
    }
    Ok(())
}

struct Partial {
    sum: DMatrix<f64>,
    /// Per-term traces in sample order.
    traces: Vec<f64>,
}

/// Sums `term(x)` over the points with a fixed pairwise halving tree, so the
/// floating-point result is identical no matter how many rayon workers run
/// the two halves of each split.
fn reduce_terms<F>(points: &[DVector<f64>], term: &F) -> Result<Partial>
where
    F: Fn(&DVector<f64>) -> Result<DMatrix<f64>> + Sync,
{
    const LEAF: usize = 8;
    if points.len() <= LEAF {
        let mut traces = Vec::with_capacity(points.len());
        let first = term(&points[0])?;
        traces.push(first.trace());
        let mut sum = first;
        for x in &points[1..] {
            let t = term(x)?;
            traces.push(t.trace());
            sum += t;
        }
        return Ok(Partial { sum, traces });
    }
    let mid = points.len() / 2;
    let (left, right) = rayon::join(
        || reduce_terms(&points[..mid], term),
        || reduce_terms(&points[mid..], term),
    );
    let mut left = left?;
    let right = right?;
    left.sum += right.sum;
    left.traces.extend(right.traces);
    Ok(Partial {
        sum: left.sum,
        traces: left.traces,
    })
}

/// Smallest rank whose certified KL bound `(κ/2) Σ_{i>r} λ_i` is at most
/// `epsilon`, capped at `r_max`; never returns 0 (a rank-0 reduction would
/// collapse the posterior onto the prior even when the bound allows it).
pub fn select_rank(eigenvalues: &[f64], kappa: f64, epsilon: f64, r_max: usize) -> Result<usize> {
    check_spectrum(eigenvalues)?;
    if !(kappa > 0.0 && kappa.is_finite()) || !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter {
            reason: format!("rank selection needs kappa > 0 and epsilon > 0, got {kappa}, {epsilon}"),
        });
    }
    let r_max = r_max.clamp(1, eigenvalues.len());
    for r in 1..=r_max {
        if kl_bound(eigenvalues, r, kappa)? <= epsilon {
            return Ok(r);
        }
    }
    Ok(r_max)
}

/// Certified bound `(κ/2) Σ_{i>r} λ_i` on the expected KL divergence between
/// the posterior and its rank-`r` reduction.
pub fn kl_bound(eigenvalues: &[f64], r: usize, kappa: f64) -> Result<f64> {
    check_spectrum(eigenvalues)?;
    let tail: f64 = eigenvalues.iter().skip(r).sum();
    Ok(0.5 * kappa * tail)
}

fn check_spectrum(eigenvalues: &[f64]) -> Result<()> {
    if eigenvalues.is_empty() {
        return Err(Error::Empty {
            context: "eigenvalue spectrum",
        });
    }
    for w in eigenvalues.windows(2) {
        if w[1] > w[0] {
            return Err(Error::InvalidParameter {
                reason: "eigenvalues must be in descending order".to_string(),
            });
        }
    }
    if eigenvalues.last().copied().unwrap_or(0.0) < 0.0 {
        return Err(Error::InvalidParameter {
            reason: "eigenvalues must be nonnegative".to_string(),
        });
    }
    Ok(())
}

/// Coordinate informativeness scores `(Γ⁻¹)_ii · H_ii`; the top-`r` indices
/// feed a coordinate projector when eigenvector-based subspaces are not
/// available (e.g. product priors kept in their own coordinates).
pub fn coordinate_scores(h: &DMatrix<f64>, gamma: &crate::linalg::SpdMatrix) -> Result<DVector<f64>> {
    if h.nrows() != gamma.dim() || h.ncols() != gamma.dim() {
        return Err(Error::DimensionMismatch {
            context: "coordinate_scores",
            expected: gamma.dim(),
            got: h.nrows(),
        });
    }
    let d = gamma.dim();
    let g = gamma.matrix();
    let exactly_diagonal =
        (0..d).all(|i| (0..i).all(|j| g[(i, j)] == 0.0 && g[(j, i)] == 0.0));
    let inv_diag: DVector<f64> = if exactly_diagonal {
        // Keep reciprocals exact for the common diagonal-metric case instead
        // of round-tripping through the Cholesky factor.
        DVector::from_fn(d, |i, _| 1.0 / g[(i, i)])
    } else {
        let inv = gamma.inverse();
        DVector::from_fn(d, |i, _| inv[(i, i)])
    };
    Ok(DVector::from_fn(d, |i, _| inv_diag[i] * h[(i, i)]))
}

/// Indices of the `r` largest scores, ties broken toward the lower index.
pub fn top_indices(scores: &DVector<f64>, r: usize) -> Result<Vec<usize>> {
    if r < 1 || r > scores.len() {
        return Err(Error::RankOutOfRange {
            rank: r,
            dim: scores.len(),
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(r);
    Ok(order)
}
