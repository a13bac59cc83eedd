//! MCMC kernels and chain drivers.
//!
//! Three families:
//! - subspace samplers on the informed subspace: [`subspace_mh`] targets the
//!   approximate posterior through a frozen reduced likelihood, and
//!   [`lift_chain`] re-attaches complement coordinates from the conditional
//!   prior;
//! - exact samplers built on the reduction: [`pseudo_marginal_mh`] redraws
//!   the complement set at every proposal, which makes the subspace marginal
//!   of the *exact* posterior invariant; [`recycle_exact`] reuses those
//!   auxiliary sets — weighted by likelihood — to emit exact full-space
//!   posterior samples; [`delayed_acceptance_mh`] screens full-space
//!   proposals with the cheap reduced likelihood before the exact
//!   second-stage correction;
//! - full-space baselines: [`pcn_mh`] (preconditioned Crank–Nicolson) and
//!   [`hmala`] (MALA preconditioned by the Gauss–Newton Hessian at the MAP).
//!
//! Subspace chains store the whitened subspace coordinates `α = Wᵀx` (an
//! `r`-vector per state) rather than the embedded `d`-vector `Vα`; `Vα`
//! reconstructs the point of `Im(P)` exactly, and the compact form keeps
//! long chains on large problems small. Full-space chains store `x`.
//!
//! Every driver takes a `u64` seed and derives independent ChaCha streams
//! from it via [`crate::rng::derived`]: tag 1 for proposals and acceptance
//! draws, tag 2 for auxiliary prior draws (fresh complement sets, lifting,
//! second-stage complement proposals), tag 3 for recycling selections.
//! Identical seeds therefore give bitwise-identical chains, and the
//! proposal/acceptance stream of a pseudo-marginal chain matches that of
//! [`subspace_mh`] with the same seed. Replicate chains should use distinct
//! master seeds (or seeds derived from one master via
//! [`crate::rng::derived`]).
//!
//! All acceptance arithmetic is in log space, so a uniform shift of every
//! log-likelihood value changes no decision.

use crate::linalg::{RankRProjector, SpdMatrix};
use crate::models::LikelihoodModel;
use crate::priors::{GaussianPrior, Prior};
use crate::reduced::{ReducedLikelihood, ReducedMode};
use crate::rng::{derived, SeedRng};
use crate::util::log_mean_exp;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngExt};
use rand_distr::{Distribution, StandardNormal};

/// Stream tag for proposal and acceptance randomness.
const STREAM_CHAIN: u64 = 1;
/// Stream tag for auxiliary prior draws (fresh sets, lifting, stage-2 draws).
const STREAM_AUX: u64 = 2;
/// Stream tag for recycling selections.
const STREAM_RECYCLE: u64 = 3;

/// Points outside `Im(P)` are rejected beyond this scaled residual.
const RANGE_TOL: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Proposal kernels
// ---------------------------------------------------------------------------

/// Proposal distribution `q(· | state)` on a coefficient space of fixed
/// dimension. `log_q` must be finite for any candidate the kernel proposes.
pub trait ProposalKernel {
    fn dim(&self) -> usize;
    fn name(&self) -> &'static str;
    fn propose(&mut self, from: &DVector<f64>, rng: &mut dyn Rng) -> Result<DVector<f64>>;
    fn log_q(&mut self, to: &DVector<f64>, from: &DVector<f64>) -> Result<f64>;
}

fn std_normal_vec(dim: usize, rng: &mut dyn Rng) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut *rng)
    })
}

/// Isotropic Gaussian random walk `x† = x + step·ξ`.
pub struct RandomWalkKernel {
    dim: usize,
    step: f64,
}

impl RandomWalkKernel {
    pub fn new(dim: usize, step: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty {
                context: "proposal dimension",
            });
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter {
                reason: format!("random-walk step must be positive and finite, got {step}"),
            });
        }
        Ok(Self { dim, step })
    }
}

impl ProposalKernel for RandomWalkKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &'static str {
        "random_walk"
    }

    fn propose(&mut self, from: &DVector<f64>, rng: &mut dyn Rng) -> Result<DVector<f64>> {
        check_dim("random-walk state", self.dim, from.len())?;
        Ok(from + std_normal_vec(self.dim, rng) * self.step)
    }

    fn log_q(&mut self, to: &DVector<f64>, from: &DVector<f64>) -> Result<f64> {
        check_dim("random-walk state", self.dim, from.len())?;
        check_dim("random-walk candidate", self.dim, to.len())?;
        let h2 = self.step * self.step;
        Ok(-0.5 * (to - from).norm_squared() / h2
            - 0.5 * self.dim as f64 * (2.0 * std::f64::consts::PI * h2).ln())
    }
}

/// Preconditioned Langevin proposal
/// `x† = x + (step²/2)·M ∇log π(x) + step·M^{1/2} ξ` with a fixed SPD
/// preconditioner `M`. Caches the drift of the two most recent states so
/// that the usual propose/forward-q/reverse-q sequence of an MH step costs
/// one fresh gradient evaluation.
pub struct MalaKernel<G> {
    step: f64,
    precond: SpdMatrix,
    grad: G,
    cache: Vec<(DVector<f64>, DVector<f64>)>,
}

impl<G: FnMut(&DVector<f64>) -> Result<DVector<f64>>> MalaKernel<G> {
    pub fn new(step: f64, precond: SpdMatrix, grad: G) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter {
                reason: format!("Langevin step must be positive and finite, got {step}"),
            });
        }
        Ok(Self {
            step,
            precond,
            grad,
            cache: Vec::with_capacity(2),
        })
    }

    fn drift_mean(&mut self, state: &DVector<f64>) -> Result<DVector<f64>> {
        if let Some((_, m)) = self.cache.iter().find(|(k, _)| k == state) {
            return Ok(m.clone());
        }
        let g = (self.grad)(state)?;
        check_dim("Langevin gradient", self.precond.dim(), g.len())?;
        let mean = state + self.precond.mul(&g) * (0.5 * self.step * self.step);
        if !mean.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "Langevin proposal drift",
            });
        }
        self.cache.insert(0, (state.clone(), mean.clone()));
        self.cache.truncate(2);
        Ok(mean)
    }
}

impl<G: FnMut(&DVector<f64>) -> Result<DVector<f64>>> ProposalKernel for MalaKernel<G> {
    fn dim(&self) -> usize {
        self.precond.dim()
    }

    fn name(&self) -> &'static str {
        "mala"
    }

    fn propose(&mut self, from: &DVector<f64>, rng: &mut dyn Rng) -> Result<DVector<f64>> {
        check_dim("Langevin state", self.dim(), from.len())?;
        let mean = self.drift_mean(from)?;
        let noise = self.precond.factor_mul(&std_normal_vec(self.dim(), rng));
        Ok(mean + noise * self.step)
    }

    fn log_q(&mut self, to: &DVector<f64>, from: &DVector<f64>) -> Result<f64> {
        check_dim("Langevin state", self.dim(), from.len())?;
        check_dim("Langevin candidate", self.dim(), to.len())?;
        let mean = self.drift_mean(from)?;
        let dev = to - mean;
        let h2 = self.step * self.step;
        let value = -0.5 * self.precond.inv_quad(&dev) / h2
            - 0.5 * self.dim() as f64 * (2.0 * std::f64::consts::PI * h2).ln()
            - 0.5 * self.precond.ln_det();
        if !value.is_finite() {
            return Err(Error::NonFinite {
                context: "Langevin proposal density",
            });
        }
        Ok(value)
    }
}

/// Default subspace proposal: MALA on the subspace coordinates,
/// preconditioned by the inverse of the projected MAP Hessian
/// `I_r + Vᵀ 𝓘(x_MAP) V` (the prior block is the identity because the basis
/// is Γ-orthonormal). The gradient combines the reduced likelihood and the
/// marginal prior.
pub fn subspace_mala_kernel<'a>(
    reduced: &'a ReducedLikelihood<'a>,
    fisher_at_map: &DMatrix<f64>,
    step: f64,
) -> Result<MalaKernel<impl FnMut(&DVector<f64>) -> Result<DVector<f64>> + 'a>> {
    let proj = reduced.projector();
    check_dim("Fisher matrix rows", proj.dim(), fisher_at_map.nrows())?;
    check_dim("Fisher matrix columns", proj.dim(), fisher_at_map.ncols())?;
    let v = proj.basis();
    let r = proj.rank();
    let h = DMatrix::identity(r, r) + v.transpose() * fisher_at_map * v;
    let h = SpdMatrix::new((&h + h.transpose()) * 0.5)?;
    let inv = h.inverse();
    let precond = SpdMatrix::new((&inv + inv.transpose()) * 0.5)?;
    let prior = reduced.prior();
    let grad = move |alpha: &DVector<f64>| -> Result<DVector<f64>> {
        let xr = proj.embed(alpha);
        let (_, g_lik) = reduced.reduced_log_likelihood_grad(&xr)?;
        let g_prior = prior.marginal_grad_log_density(proj, &xr)?;
        Ok(g_lik + g_prior)
    };
    MalaKernel::new(step, precond, grad)
}

// ---------------------------------------------------------------------------
// Chain records
// ---------------------------------------------------------------------------

/// A recorded chain: one state per MH update (the initial point is not
/// stored), its unnormalized log-target value, and whether that update
/// accepted its proposal. Subspace chains store coordinate vectors `α`;
/// full-space chains store `x`. For records produced by [`lift_chain`] and
/// [`recycle_exact`] the log-target column carries over the source subspace
/// chain's values (the attached complement coordinate is a conditional draw,
/// not part of the accept/reject target).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRecord {
    dim: usize,
    kernel: String,
    seed: u64,
    states: Vec<DVector<f64>>,
    log_targets: Vec<f64>,
    accepted: Vec<bool>,
}

impl ChainRecord {
    /// Empty record; used by drivers and by file loaders.
    pub fn with_capacity(dim: usize, kernel: String, seed: u64, capacity: usize) -> Self {
        Self {
            dim,
            kernel,
            seed,
            states: Vec::with_capacity(capacity),
            log_targets: Vec::with_capacity(capacity),
            accepted: Vec::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, state: DVector<f64>, log_target: f64, accepted: bool) {
        debug_assert_eq!(state.len(), self.dim);
        self.states.push(state);
        self.log_targets.push(log_target);
        self.accepted.push(accepted);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kernel(&self) -> &str {
        &self.kernel
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn state(&self, j: usize) -> &DVector<f64> {
        &self.states[j]
    }

    pub fn log_targets(&self) -> &[f64] {
        &self.log_targets
    }

    pub fn accepted(&self) -> &[bool] {
        &self.accepted
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.accepted.is_empty() {
            return 0.0;
        }
        self.accepted.iter().filter(|&&a| a).count() as f64 / self.accepted.len() as f64
    }

    /// The scalar series of component `i` across all states.
    pub fn component_series(&self, i: usize) -> Vec<f64> {
        assert!(i < self.dim, "component {i} out of range for dim {}", self.dim);
        self.states.iter().map(|s| s[i]).collect()
    }

    pub fn mean(&self) -> Result<DVector<f64>> {
        if self.states.is_empty() {
            return Err(Error::Empty {
                context: "chain states",
            });
        }
        let mut m = DVector::zeros(self.dim);
        for s in &self.states {
            m += s;
        }
        Ok(m / self.states.len() as f64)
    }

    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        if self.states.len() < 2 {
            return Err(Error::SeriesTooShort {
                context: "chain covariance",
                min: 2,
                got: self.states.len(),
            });
        }
        let m = self.mean()?;
        let mut c = DMatrix::zeros(self.dim, self.dim);
        for s in &self.states {
            let dev = s - &m;
            c.ger(1.0, &dev, &dev, 1.0);
        }
        let c = (&c + c.transpose()) * 0.5;
        Ok(c / (self.states.len() - 1) as f64)
    }
}

// ---------------------------------------------------------------------------
// Generic Metropolis–Hastings driver
// ---------------------------------------------------------------------------

/// Likelihood-domain failures at a proposal mean a zero-density candidate
/// (reject); anything else is a real error.
fn domain_to_neg_inf(r: Result<f64>) -> Result<f64> {
    match r {
        Err(Error::LikelihoodDomain { .. }) => Ok(f64::NEG_INFINITY),
        other => other,
    }
}

fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        });
    }
    Ok(())
}

fn check_in_range(proj: &RankRProjector, x: &DVector<f64>) -> Result<()> {
    let residual = proj.range_residual(x);
    if residual > RANGE_TOL * (1.0 + x.amax()) {
        return Err(Error::NotInRange { residual });
    }
    Ok(())
}

fn drive(
    target: &mut dyn FnMut(&DVector<f64>) -> Result<f64>,
    kernel: &mut dyn ProposalKernel,
    steps: usize,
    init: DVector<f64>,
    seed: u64,
    label: String,
) -> Result<ChainRecord> {
    check_dim("chain initial state", kernel.dim(), init.len())?;
    let mut rng = derived(seed, STREAM_CHAIN);
    let mut cur = init;
    let mut cur_t = target(&cur)?;
    if !cur_t.is_finite() {
        return Err(Error::NonFinite {
            context: "initial log-target",
        });
    }
    let mut rec = ChainRecord::with_capacity(cur.len(), label, seed, steps);
    for _ in 0..steps {
        let cand = kernel.propose(&cur, &mut rng)?;
        let u: f64 = rng.random();
        let cand_t = target(&cand)?;
        let mut accept = false;
        if cand_t > f64::NEG_INFINITY && !cand_t.is_nan() {
            let log_ratio =
                cand_t - cur_t + kernel.log_q(&cur, &cand)? - kernel.log_q(&cand, &cur)?;
            if log_ratio.is_nan() {
                return Err(Error::NonFinite {
                    context: "acceptance ratio",
                });
            }
            accept = u.ln() < log_ratio;
        }
        if accept {
            cur = cand;
            cur_t = cand_t;
        }
        rec.push(cur.clone(), cur_t, accept);
    }
    Ok(rec)
}

// ---------------------------------------------------------------------------
// Subspace Metropolis–Hastings and lifting
// ---------------------------------------------------------------------------

/// MH chain on the informed subspace targeting
/// `𝓛̃_N(x_r) · π_pr(x_r)` with the frozen complement set. States are the
/// coordinates `α` (`x_r = Vα`); `init` is a full-space point of `Im(P)`.
pub fn subspace_mh(
    reduced: &ReducedLikelihood,
    kernel: &mut dyn ProposalKernel,
    steps: usize,
    init: &DVector<f64>,
    seed: u64,
) -> Result<ChainRecord> {
    let proj = reduced.projector();
    check_dim("proposal kernel dimension", proj.rank(), kernel.dim())?;
    check_dim("subspace chain init", proj.dim(), init.len())?;
    check_in_range(proj, init)?;
    let prior = reduced.prior();
    let alpha0 = proj.coefficients(init);
    let label = format!("subspace_mh[{}]", kernel.name());
    let mut target = |alpha: &DVector<f64>| -> Result<f64> {
        let xr = proj.embed(alpha);
        let ll = domain_to_neg_inf(reduced.reduced_log_likelihood(&xr))?;
        if ll == f64::NEG_INFINITY {
            return Ok(ll);
        }
        Ok(ll + prior.marginal_log_density(proj, &xr)?)
    };
    drive(&mut target, kernel, steps, alpha0, seed, label)
}

/// Attaches a conditional prior draw `x_⊥ ~ π_pr(· | x_r)` to every state of
/// a subspace chain, producing full-space samples of the approximate
/// posterior. Complement draws are independent across states.
pub fn lift_chain(
    chain: &ChainRecord,
    prior: &dyn Prior,
    projector: &RankRProjector,
    seed: u64,
) -> Result<ChainRecord> {
    check_dim("subspace chain width", projector.rank(), chain.dim())?;
    check_dim("prior dimension", projector.dim(), prior.dim())?;
    let mut rng = derived(seed, STREAM_AUX);
    let mut rec = ChainRecord::with_capacity(
        projector.dim(),
        format!("lift[{}]", chain.kernel()),
        seed,
        chain.len(),
    );
    for j in 0..chain.len() {
        let xr = projector.embed(chain.state(j));
        let xp = prior.conditional_sample(projector, &xr, &mut rng)?;
        rec.push(xr + xp, chain.log_targets()[j], chain.accepted()[j]);
    }
    Ok(rec)
}

// ---------------------------------------------------------------------------
// Pseudo-marginal sampling and recycling
// ---------------------------------------------------------------------------

/// A pseudo-marginal chain: the subspace coordinate chain plus, per state,
/// the complement sample set and the cached per-sample log-likelihoods that
/// produced its accepted estimate.
#[derive(Debug)]
pub struct PmChainRecord {
    chain: ChainRecord,
    sets: Vec<Vec<DVector<f64>>>,
    sample_lls: Vec<Vec<f64>>,
}

impl PmChainRecord {
    pub fn chain(&self) -> &ChainRecord {
        &self.chain
    }

    pub fn into_chain(self) -> ChainRecord {
        self.chain
    }

    /// Complement sample set carried by state `j`.
    pub fn set(&self, j: usize) -> &[DVector<f64>] {
        &self.sets[j]
    }

    /// Cached `log 𝓛(x_r + x_⊥^{(i)})` values for state `j`.
    pub fn sample_log_likelihoods(&self, j: usize) -> &[f64] {
        &self.sample_lls[j]
    }
}

struct PmCur {
    alpha: DVector<f64>,
    xr: DVector<f64>,
    set: Vec<DVector<f64>>,
    lls: Vec<f64>,
    target: f64,
}

fn draw_set(
    prior: &dyn Prior,
    proj: &RankRProjector,
    xr: &DVector<f64>,
    n: usize,
    rng: &mut SeedRng,
) -> Result<Vec<DVector<f64>>> {
    (0..n)
        .map(|_| prior.conditional_sample(proj, xr, &mut *rng))
        .collect()
}

fn pm_core(
    reduced: &ReducedLikelihood,
    kernel: &mut dyn ProposalKernel,
    steps: usize,
    init: &DVector<f64>,
    seed: u64,
    mut sink: impl FnMut(&PmCur, bool),
) -> Result<ChainRecord> {
    if reduced.mode() != ReducedMode::Likelihood {
        return Err(Error::InvalidParameter {
            reason: "pseudo-marginal sampling requires the reduced_likelihood mode \
                     (the estimator must be a per-sample likelihood average)"
                .to_string(),
        });
    }
    let proj = reduced.projector();
    let prior = reduced.prior();
    let n = reduced.n_samples();
    check_dim("proposal kernel dimension", proj.rank(), kernel.dim())?;
    check_dim("pseudo-marginal chain init", proj.dim(), init.len())?;
    check_in_range(proj, init)?;

    let mut s_chain = derived(seed, STREAM_CHAIN);
    let mut s_aux = derived(seed, STREAM_AUX);

    let alpha = proj.coefficients(init);
    let xr = proj.embed(&alpha);
    let set = draw_set(prior, proj, &xr, n, &mut s_aux)?;
    let lls = reduced.per_sample_log_likelihoods(&xr, &set)?;
    let target0 = log_mean_exp(&lls) + prior.marginal_log_density(proj, &xr)?;
    if !target0.is_finite() {
        return Err(Error::NonFinite {
            context: "initial pseudo-marginal estimate",
        });
    }
    let mut cur = PmCur {
        alpha,
        xr,
        set,
        lls,
        target: target0,
    };

    let label = format!("pseudo_marginal[{}]", kernel.name());
    let mut rec = ChainRecord::with_capacity(proj.rank(), label, seed, steps);
    for _ in 0..steps {
        let cand_alpha = kernel.propose(&cur.alpha, &mut s_chain)?;
        let u: f64 = s_chain.random();
        let cand_xr = proj.embed(&cand_alpha);
        // The fresh set is drawn unconditionally so the auxiliary stream
        // advances identically whether or not the candidate survives.
        let cand_set = draw_set(prior, proj, &cand_xr, n, &mut s_aux)?;
        let cand_lls = match reduced.per_sample_log_likelihoods(&cand_xr, &cand_set) {
            Ok(v) => v,
            Err(Error::LikelihoodDomain { .. }) => vec![f64::NEG_INFINITY; n],
            Err(e) => return Err(e),
        };
        let cand_val = log_mean_exp(&cand_lls);
        let mut accept = false;
        if cand_val > f64::NEG_INFINITY && !cand_val.is_nan() {
            let cand_target = cand_val + prior.marginal_log_density(proj, &cand_xr)?;
            let log_ratio = cand_target - cur.target
                + kernel.log_q(&cur.alpha, &cand_alpha)?
                - kernel.log_q(&cand_alpha, &cur.alpha)?;
            if log_ratio.is_nan() {
                return Err(Error::NonFinite {
                    context: "acceptance ratio",
                });
            }
            if u.ln() < log_ratio {
                accept = true;
                cur = PmCur {
                    alpha: cand_alpha,
                    xr: cand_xr,
                    set: cand_set,
                    lls: cand_lls,
                    target: cand_target,
                };
            }
        }
        rec.push(cur.alpha.clone(), cur.target, accept);
        sink(&cur, accept);
    }
    Ok(rec)
}

/// Pseudo-marginal MH on the subspace coordinates: the reduced-likelihood
/// estimate is recomputed from a fresh conditional-prior set at every
/// proposal, and the accepted state keeps its set. The subspace marginal of
/// the exact posterior is invariant for any `N ≥ 1`.
pub fn pseudo_marginal_mh(
    reduced: &ReducedLikelihood,
    kernel: &mut dyn ProposalKernel,
    steps: usize,
    init: &DVector<f64>,
    seed: u64,
) -> Result<PmChainRecord> {
    let mut sets = Vec::with_capacity(steps);
    let mut sample_lls = Vec::with_capacity(steps);
    let chain = pm_core(reduced, kernel, steps, init, seed, |cur, _| {
        sets.push(cur.set.clone());
        sample_lls.push(cur.lls.clone());
    })?;
    Ok(PmChainRecord {
        chain,
        sets,
        sample_lls,
    })
}

/// Gumbel-max categorical draw over log-weights; ties (measure zero) go to
/// the lower index.
fn gumbel_argmax(log_weights: &[f64], rng: &mut dyn Rng) -> Result<usize> {
    let mut best = None;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &lw) in log_weights.iter().enumerate() {
        let u: f64 = rng.random();
        let v = lw - (-u.ln()).ln();
        if v > best_v {
            best_v = v;
            best = Some(i);
        }
    }
    best.ok_or(Error::NonFinite {
        context: "recycling weights",
    })
}

/// Converts a pseudo-marginal chain into exact full-space posterior samples:
/// for each state one complement sample is selected from its auxiliary set
/// with probability proportional to its likelihood, and attached to `x_r`.
pub fn recycle_exact(
    pm: &PmChainRecord,
    projector: &RankRProjector,
    seed: u64,
) -> Result<ChainRecord> {
    check_dim("pseudo-marginal chain width", projector.rank(), pm.chain.dim())?;
    let mut rng = derived(seed, STREAM_RECYCLE);
    let mut rec = ChainRecord::with_capacity(
        projector.dim(),
        format!("recycle[{}]", pm.chain.kernel()),
        seed,
        pm.chain.len(),
    );
    for j in 0..pm.chain.len() {
        let k = gumbel_argmax(&pm.sample_lls[j], &mut rng)?;
        let x = projector.embed(pm.chain.state(j)) + &pm.sets[j][k];
        rec.push(x, pm.chain.log_targets()[j], pm.chain.accepted()[j]);
    }
    Ok(rec)
}

/// Runs the pseudo-marginal chain and recycles on the fly, without retaining
/// the per-state auxiliary sets: returns `(subspace marginal chain,
/// full-space recycled chain)`. With the same seed the marginal chain is
/// bitwise identical to [`pseudo_marginal_mh`] and the recycled chain to
/// [`recycle_exact`] on its output.
pub fn pseudo_marginal_recycled(
    reduced: &ReducedLikelihood,
    kernel: &mut dyn ProposalKernel,
    steps: usize,
    init: &DVector<f64>,
    seed: u64,
) -> Result<(ChainRecord, ChainRecord)> {
    let proj = reduced.projector();
    let mut s_recycle = derived(seed, STREAM_RECYCLE);
    let mut full = ChainRecord::with_capacity(
        proj.dim(),
        format!("recycle[pseudo_marginal[{}]]", kernel.name()),
        seed,
        steps,
    );
    let mut deferred: Option<Error> = None;
    let marginal = pm_core(reduced, kernel, steps, init, seed, |cur, accept| {
        if deferred.is_some() {
            return;
        }
        match gumbel_argmax(&cur.lls, &mut s_recycle) {
            Ok(k) => full.push(&cur.xr + &cur.set[k], cur.target, accept),
            Err(e) => deferred = Some(e),
        }
    })?;
    if let Some(e) = deferred {
        return Err(e);
    }
    Ok((marginal, full))
}

// ---------------------------------------------------------------------------
// Delayed acceptance
// ---------------------------------------------------------------------------

/// A delayed-acceptance chain plus its second-stage statistics.
pub struct DaChainRecord {
    chain: ChainRecord,
    stage2_evals: usize,
    stage2_beta_sum: f64,
}

impl DaChainRecord {
    pub fn chain(&self) -> &ChainRecord {
        &self.chain
    }

    pub fn into_chain(self) -> ChainRecord {
        self.chain
    }

    /// Number of proposals that survived the first stage (= full-likelihood
    /// evaluations performed).
    pub fn stage2_evals(&self) -> usize {
        self.stage2_evals
    }

    /// Mean second-stage acceptance probability `E[β]` over the proposals
    /// that reached stage two; `NaN` if none did.
    pub fn stage2_mean_beta(&self) -> f64 {
        if self.stage2_evals == 0 {
            f64::NAN
        } else {
            self.stage2_beta_sum / self.stage2_evals as f64
        }
    }
}

/// Two-stage MH on the full space. Stage one screens a subspace proposal
/// `x_r†` against the reduced target `𝓛̃_N(x_r)π_pr(x_r)`; survivors get a
/// complement draw `x_⊥† ~ π_pr(·|x_r†)` and the pair is accepted with
/// `β = min{1, 𝓛(x_r†+x_⊥†)𝓛̃_N(x_r) / (𝓛(x_r+x_⊥)𝓛̃_N(x_r†))}`.
/// The conditional-prior factors cancel, so the exact posterior is invariant
/// for any screen quality. A candidate exactly equal to the current
/// coordinates (measure zero for continuous kernels) is treated as a
/// first-stage rejection.
pub fn delayed_acceptance_mh(
    reduced: &ReducedLikelihood,
    likelihood: &dyn LikelihoodModel,
    kernel: &mut dyn ProposalKernel,
    steps: usize,
    init: &DVector<f64>,
    seed: u64,
) -> Result<DaChainRecord> {
    let proj = reduced.projector();
    let prior = reduced.prior();
    check_dim("proposal kernel dimension", proj.rank(), kernel.dim())?;
    check_dim("delayed-acceptance init", proj.dim(), init.len())?;
    check_dim("full likelihood dimension", proj.dim(), likelihood.dim())?;

    let mut s_chain = derived(seed, STREAM_CHAIN);
    let mut s_aux = derived(seed, STREAM_AUX);

    let mut alpha = proj.coefficients(init);
    let mut x = init.clone();
    let mut full_ll = likelihood.log_likelihood(&x)?;
    let xr0 = proj.embed(&alpha);
    let mut red_ll = reduced.reduced_log_likelihood(&xr0)?;
    let mut marg = prior.marginal_log_density(proj, &xr0)?;
    let mut cur_target = full_ll + prior.log_density(&x);
    if !(full_ll.is_finite() && red_ll.is_finite() && cur_target.is_finite()) {
        return Err(Error::NonFinite {
            context: "initial log-target",
        });
    }

    let label = format!("delayed_acceptance[{}]", kernel.name());
    let mut rec = ChainRecord::with_capacity(proj.dim(), label, seed, steps);
    let mut stage2_evals = 0usize;
    let mut stage2_beta_sum = 0.0f64;

    for _ in 0..steps {
        let cand_alpha = kernel.propose(&alpha, &mut s_chain)?;
        let u1: f64 = s_chain.random();
        let mut accept = false;
        if cand_alpha != alpha {
            let cand_xr = proj.embed(&cand_alpha);
            let cand_red = domain_to_neg_inf(reduced.reduced_log_likelihood(&cand_xr))?;
            if cand_red > f64::NEG_INFINITY && !cand_red.is_nan() {
                let cand_marg = prior.marginal_log_density(proj, &cand_xr)?;
                let log_a1 = cand_red + cand_marg - red_ll - marg
                    + kernel.log_q(&alpha, &cand_alpha)?
                    - kernel.log_q(&cand_alpha, &alpha)?;
                if log_a1.is_nan() {
                    return Err(Error::NonFinite {
                        context: "acceptance ratio",
                    });
                }
                if u1.ln() < log_a1 {
                    let u2: f64 = s_chain.random();
                    let cand_xp = prior.conditional_sample(proj, &cand_xr, &mut s_aux)?;
                    let cand_x = &cand_xr + &cand_xp;
                    let cand_full = domain_to_neg_inf(likelihood.log_likelihood(&cand_x))?;
                    stage2_evals += 1;
                    if cand_full > f64::NEG_INFINITY && !cand_full.is_nan() {
                        let log_beta = (cand_full + red_ll) - (full_ll + cand_red);
                        stage2_beta_sum += log_beta.min(0.0).exp();
                        if u2.ln() < log_beta {
                            accept = true;
                            alpha = cand_alpha;
                            x = cand_x;
                            full_ll = cand_full;
                            red_ll = cand_red;
                            marg = cand_marg;
                            cur_target = full_ll + prior.log_density(&x);
                        }
                    }
                }
            }
        }
        rec.push(x.clone(), cur_target, accept);
    }
    Ok(DaChainRecord {
        chain: rec,
        stage2_evals,
        stage2_beta_sum,
    })
}

// ---------------------------------------------------------------------------
// Full-space baselines
// ---------------------------------------------------------------------------

/// Preconditioned Crank–Nicolson: `x† = m + √(1−β²)(x−m) + β ξ` with
/// `ξ ~ N(0, Σ_pr)`. The proposal is prior-reversible, so the acceptance
/// ratio is the likelihood ratio alone. Requires `β ∈ (0, 1]`; `β = 1` is an
/// independence sampler from the prior.
pub fn pcn_mh(
    prior: &GaussianPrior,
    likelihood: &dyn LikelihoodModel,
    beta: f64,
    steps: usize,
    init: &DVector<f64>,
    seed: u64,
) -> Result<ChainRecord> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParameter {
            reason: format!("pCN step must lie in (0, 1], got {beta}"),
        });
    }
    let dim = prior.dim();
    check_dim("pCN init", dim, init.len())?;
    check_dim("likelihood dimension", dim, likelihood.dim())?;
    let mut rng = derived(seed, STREAM_CHAIN);
    let contraction = (1.0 - beta * beta).sqrt();
    let mean = prior.mean();

    let mut cur = init.clone();
    let mut cur_ll = likelihood.log_likelihood(&cur)?;
    if !cur_ll.is_finite() {
        return Err(Error::NonFinite {
            context: "initial log-target",
        });
    }
    let mut cur_target = cur_ll + Prior::log_density(prior, &cur);

    let mut rec = ChainRecord::with_capacity(dim, format!("pcn[beta={beta}]"), seed, steps);
    for _ in 0..steps {
        let xi = prior.cov().factor_mul(&std_normal_vec(dim, &mut rng));
        let u: f64 = rng.random();
        let cand = mean + (&cur - mean) * contraction + xi * beta;
        let cand_ll = domain_to_neg_inf(likelihood.log_likelihood(&cand))?;
        let accept = cand_ll > f64::NEG_INFINITY
            && !cand_ll.is_nan()
            && u.ln() < cand_ll - cur_ll;
        if accept {
            cur = cand;
            cur_ll = cand_ll;
            cur_target = cur_ll + Prior::log_density(prior, &cur);
        }
        rec.push(cur.clone(), cur_target, accept);
    }
    Ok(rec)
}

/// Gauss–Newton (Fisher-scoring) ascent of the log-posterior
/// `log 𝓛(x) + log π_pr(x)` with backtracking: steps solve
/// `(Γ + 𝓘(x)) δ = ∇`. Stops when the gradient norm drops below `1e-8` or
/// after 100 iterations; errors only if no descent direction step succeeds.
pub fn gauss_newton_map(
    prior: &GaussianPrior,
    likelihood: &dyn LikelihoodModel,
    init: &DVector<f64>,
) -> Result<DVector<f64>> {
    let dim = prior.dim();
    check_dim("optimizer init", dim, init.len())?;
    check_dim("likelihood dimension", dim, likelihood.dim())?;
    let neg_log_post = |x: &DVector<f64>| -> Option<f64> {
        let ll = likelihood.log_likelihood(x).ok()?;
        let v = -(ll + Prior::log_density(prior, x));
        v.is_finite().then_some(v)
    };

    let mut x = init.clone();
    let mut fx = neg_log_post(&x).ok_or(Error::NonFinite {
        context: "initial objective",
    })?;
    for _ in 0..100 {
        let grad = likelihood.grad_log_likelihood(&x)? + prior.grad_log_density(&x);
        if grad.norm() < 1e-8 {
            return Ok(x);
        }
        let h = prior.precision().matrix() + likelihood.fisher(&x)?;
        let h = SpdMatrix::new((&h + h.transpose()) * 0.5)?;
        let dir = h.solve(&grad);
        let mut t = 1.0;
        let mut advanced = false;
        for _ in 0..40 {
            let xn = &x + &dir * t;
            if let Some(f) = neg_log_post(&xn) {
                if f < fx {
                    x = xn;
                    fx = f;
                    advanced = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !advanced {
            // At an f64-resolution optimum the objective can no longer
            // strictly decrease even though the gradient sits just above the
            // convergence threshold; accept the point if the gradient is
            // small, and report divergence otherwise.
            if grad.norm() < 1e-6 {
                return Ok(x);
            }
            return Err(Error::OptimizationDiverged {
                reason: format!(
                    "no descent along the scoring direction; |grad| = {:.3e}, objective = {:.6e}",
                    grad.norm(),
                    fx
                ),
            });
        }
    }
    Ok(x)
}

/// Full-space MALA preconditioned by the inverse Gauss–Newton Hessian
/// `(Γ + 𝓘(x_MAP))⁻¹` at the MAP point found from `init`.
pub fn hmala(
    prior: &GaussianPrior,
    likelihood: &dyn LikelihoodModel,
    step: f64,
    steps: usize,
    init: &DVector<f64>,
    seed: u64,
) -> Result<ChainRecord> {
    let x_map = gauss_newton_map(prior, likelihood, init)?;
    let h = prior.precision().matrix() + likelihood.fisher(&x_map)?;
    let inv = SpdMatrix::new((&h + h.transpose()) * 0.5)?.inverse();
    let precond = SpdMatrix::new((&inv + inv.transpose()) * 0.5)?;
    let mut kernel = MalaKernel::new(step, precond, |x: &DVector<f64>| {
        Ok(likelihood.grad_log_likelihood(x)? + prior.grad_log_density(x))
    })?;
    let mut target = |x: &DVector<f64>| -> Result<f64> {
        let ll = domain_to_neg_inf(likelihood.log_likelihood(x))?;
        if ll == f64::NEG_INFINITY {
            return Ok(ll);
        }
        Ok(ll + Prior::log_density(prior, x))
    };
    drive(
        &mut target,
        &mut kernel,
        steps,
        init.clone(),
        seed,
        "hmala".to_string(),
    )
}
