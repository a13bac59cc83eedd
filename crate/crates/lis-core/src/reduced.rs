//! Parameter-reduced likelihoods on the informed subspace.
//!
//! The optimal rank-`r` reduction replaces the likelihood `𝓛(x)` by its
//! conditional expectation over the complement, `𝓛*(x_r) = E[𝓛(x_r + X_⊥)]`.
//! That integral is intractable, so it is estimated by an `N`-sample average
//! over complement prior draws — either a set frozen once (giving a fixed,
//! cheap approximate target) or redrawn per evaluation (the unbiased
//! estimator pseudo-marginal samplers need). A second mode averages forward
//! model outputs instead of likelihood values and applies the Gaussian
//! misfit to the average; its derivation assumes Gaussian observations, so
//! it is only constructible from a Gaussian likelihood.

use crate::linalg::{RankRProjector, SpdMatrix};
use crate::models::{ForwardModel, GaussianLikelihood, LikelihoodModel};
use crate::priors::Prior;
use crate::util::{log_mean_exp, log_sum_exp};
use crate::{Error, Result};
use nalgebra::DVector;
use rand::Rng;

/// How the complement average is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReducedMode {
    /// `𝓛̃_N(x_r) = (1/N) Σ_i 𝓛(x_r + x_⊥^{(i)})`, via log-sum-exp.
    Likelihood,
    /// `G̃_N(x_r) = (1/N) Σ_i G(x_r + x_⊥^{(i)})`, then the Gaussian misfit
    /// of the averaged output.
    Forward,
}

impl ReducedMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ReducedMode::Likelihood => "reduced_likelihood",
            ReducedMode::Forward => "reduced_forward",
        }
    }
}

enum Eval<'a> {
    Likelihood(&'a dyn LikelihoodModel),
    Forward {
        model: &'a dyn ForwardModel,
        noise: &'a SpdMatrix,
        data: &'a DVector<f64>,
        /// `-(m/2) ln 2π - ½ ln det Σ_obs`.
        norm_const: f64,
    },
}

/// Reduced likelihood with a frozen complement sample set.
pub struct ReducedLikelihood<'a> {
    projector: &'a RankRProjector,
    prior: &'a dyn Prior,
    eval: Eval<'a>,
    frozen: Vec<DVector<f64>>,
}

const RANGE_TOL: f64 = 1e-8;
/// Frozen samples must lie in `Ker(P)` to this absolute tolerance.
const KERNEL_TOL: f64 = 1e-10;

impl<'a> ReducedLikelihood<'a> {
    /// Likelihood-averaging reduction with `n` complement samples drawn once
    /// from the complement prior.
    pub fn frozen(
        projector: &'a RankRProjector,
        prior: &'a dyn Prior,
        likelihood: &'a dyn LikelihoodModel,
        n: usize,
        rng: &mut dyn Rng,
    ) -> Result<Self> {
        let frozen = draw_frozen(projector, prior, likelihood.dim(), n, rng)?;
        Ok(Self {
            projector,
            prior,
            eval: Eval::Likelihood(likelihood),
            frozen,
        })
    }

    /// Forward-model-averaging reduction; Gaussian observations only (the
    /// conditional-expectation derivation of this mode assumes them).
    pub fn frozen_forward<M: ForwardModel>(
        projector: &'a RankRProjector,
        prior: &'a dyn Prior,
        likelihood: &'a GaussianLikelihood<M>,
        n: usize,
        rng: &mut dyn Rng,
    ) -> Result<Self> {
        let frozen = draw_frozen(projector, prior, likelihood.dim(), n, rng)?;
        let m = likelihood.dim_obs() as f64;
        let norm_const =
            -0.5 * (m * (2.0 * std::f64::consts::PI).ln() + likelihood.noise().ln_det());
        Ok(Self {
            projector,
            prior,
            eval: Eval::Forward {
                model: likelihood.model(),
                noise: likelihood.noise(),
                data: likelihood.data(),
                norm_const,
            },
            frozen,
        })
    }

    pub fn projector(&self) -> &RankRProjector {
        self.projector
    }

    pub fn prior(&self) -> &dyn Prior {
        self.prior
    }

    pub fn mode(&self) -> ReducedMode {
        match self.eval {
            Eval::Likelihood(_) => ReducedMode::Likelihood,
            Eval::Forward { .. } => ReducedMode::Forward,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.frozen.len()
    }

    pub fn frozen_samples(&self) -> &[DVector<f64>] {
        &self.frozen
    }

    /// `log 𝓛̃_N(x_r)` with the frozen set.
    pub fn reduced_log_likelihood(&self, xr: &DVector<f64>) -> Result<f64> {
        self.log_likelihood_with(xr, &self.frozen)
    }

    /// `log 𝓛̃_N(x_r)` with a caller-supplied complement set (pseudo-marginal
    /// chain state, recycling).
    pub fn log_likelihood_with(
        &self,
        xr: &DVector<f64>,
        samples: &[DVector<f64>],
    ) -> Result<f64> {
        self.check_range(xr)?;
        check_set(samples)?;
        match &self.eval {
            Eval::Likelihood(lik) => {
                let terms = per_sample_terms(lik, xr, samples)?;
                Ok(log_mean_exp(&terms))
            }
            Eval::Forward {
                model,
                noise,
                data,
                norm_const,
            } => {
                let mut mean = DVector::zeros(data.len());
                for s in samples {
                    mean += model.apply(&(xr + s))?;
                }
                mean /= samples.len() as f64;
                let r = mean - *data;
                if !r.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFinite {
                        context: "reduced forward output",
                    });
                }
                Ok(-0.5 * noise.inv_quad(&r) + norm_const)
            }
        }
    }

    /// Value and gradient of `log 𝓛̃_N` with respect to the subspace
    /// coordinates `α = Wᵀx_r` (an `r`-vector), with the frozen set.
    pub fn reduced_log_likelihood_grad(&self, xr: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        self.check_range(xr)?;
        let v = self.projector.basis();
        match &self.eval {
            Eval::Likelihood(lik) => {
                let terms = per_sample_terms(lik, xr, &self.frozen)?;
                let value = log_mean_exp(&terms);
                let lse = log_sum_exp(&terms);
                let mut grad = DVector::zeros(self.projector.rank());
                for (s, &term) in self.frozen.iter().zip(&terms) {
                    let weight = (term - lse).exp(); // softmax
                    let gx = lik.grad_log_likelihood(&(xr + s))?;
                    grad += v.transpose() * gx * weight;
                }
                Ok((value, grad))
            }
            Eval::Forward {
                model,
                noise,
                data,
                norm_const,
            } => {
                let mut mean = DVector::zeros(data.len());
                for s in &self.frozen {
                    mean += model.apply(&(xr + s))?;
                }
                mean /= self.frozen.len() as f64;
                let r = mean - *data;
                if !r.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFinite {
                        context: "reduced forward output",
                    });
                }
                let value = -0.5 * noise.inv_quad(&r) + norm_const;
                let w = noise.solve(&r);
                let mut grad = DVector::zeros(self.projector.rank());
                for s in &self.frozen {
                    grad -= v.transpose() * model.jacobian_t_apply(&(xr + s), &w)?;
                }
                grad /= self.frozen.len() as f64;
                Ok((value, grad))
            }
        }
    }

    /// Draws a fresh complement set from `π_pr(x_⊥ | x_r)` and evaluates;
    /// returns the value together with the set so pseudo-marginal samplers
    /// can keep it as auxiliary state.
    pub fn fresh_reduced_log_likelihood(
        &self,
        xr: &DVector<f64>,
        rng: &mut dyn Rng,
    ) -> Result<(f64, Vec<DVector<f64>>)> {
        let n = self.frozen.len();
        let mut set = Vec::with_capacity(n);
        for _ in 0..n {
            set.push(self.prior.conditional_sample(self.projector, xr, &mut *rng)?);
        }
        let value = self.log_likelihood_with(xr, &set)?;
        Ok((value, set))
    }

    /// Per-sample log-likelihood terms `ℓ_i = log 𝓛(x_r + x_⊥^{(i)})`.
    /// Only meaningful in likelihood mode (forward mode has no per-sample
    /// likelihood decomposition), which is also the only mode for which the
    /// sample-average estimator is unbiased on the likelihood scale.
    pub fn per_sample_log_likelihoods(
        &self,
        xr: &DVector<f64>,
        samples: &[DVector<f64>],
    ) -> Result<Vec<f64>> {
        self.check_range(xr)?;
        check_set(samples)?;
        match &self.eval {
            Eval::Likelihood(lik) => per_sample_terms(lik, xr, samples),
            Eval::Forward { .. } => Err(Error::InvalidParameter {
                reason: "per-sample likelihood terms require the reduced_likelihood mode"
                    .to_string(),
            }),
        }
    }

    /// Unnormalized log-density of the approximate posterior
    /// `π̃_pos(x) ∝ 𝓛̃_N(x_r) π_pr(x_r) π_pr(x_⊥ | x_r)` at a full-space
    /// point.
    pub fn approx_posterior_log_density(&self, x: &DVector<f64>) -> Result<f64> {
        let (xr, xperp) = self.projector.split(x);
        let ll = self.reduced_log_likelihood(&xr)?;
        let marg = self.prior.marginal_log_density(self.projector, &xr)?;
        let cond = self
            .prior
            .conditional_log_density(self.projector, &xr, &xperp)?;
        Ok(ll + marg + cond)
    }

    fn check_range(&self, xr: &DVector<f64>) -> Result<()> {
        let residual = self.projector.range_residual(xr);
        if residual > RANGE_TOL * (1.0 + xr.amax()) {
            return Err(Error::NotInRange { residual });
        }
        Ok(())
    }
}

fn per_sample_terms(
    lik: &&dyn LikelihoodModel,
    xr: &DVector<f64>,
    samples: &[DVector<f64>],
) -> Result<Vec<f64>> {
    samples.iter().map(|s| lik.log_likelihood(&(xr + s))).collect()
}

fn draw_frozen(
    projector: &RankRProjector,
    prior: &dyn Prior,
    lik_dim: usize,
    n: usize,
    rng: &mut dyn Rng,
) -> Result<Vec<DVector<f64>>> {
    if projector.dim() != prior.dim() || projector.dim() != lik_dim {
        return Err(Error::DimensionMismatch {
            context: "ReducedLikelihood dimensions",
            expected: prior.dim(),
            got: projector.dim().max(lik_dim),
        });
    }
    if n < 1 {
        return Err(Error::InvalidParameter {
            reason: "complement sample count N must be at least 1".to_string(),
        });
    }
    let mut frozen = Vec::with_capacity(n);
    for _ in 0..n {
        let s = prior.complement_sample(projector, &mut *rng)?;
        let residual = projector.apply(&s).amax();
        if residual > KERNEL_TOL * (1.0 + s.amax()) {
            return Err(Error::NotInRange { residual });
        }
        frozen.push(s);
    }
    Ok(frozen)
}

fn check_set(samples: &[DVector<f64>]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Empty {
            context: "complement sample set",
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::generalized_eig;
    use crate::models::LinearModel;
    use crate::priors::GaussianPrior;
    use crate::rng::seeded;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    /// 2-D linear-Gaussian toy: correlated prior, 1-D observation.
    struct Toy {
        prior: GaussianPrior,
        lik: GaussianLikelihood<LinearModel>,
    }

    fn toy() -> Toy {
        let prior = GaussianPrior::new(
            DVector::from_vec(vec![0.4, -0.2]),
            SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[1.5, 0.4, 0.4, 0.8])).unwrap(),
        )
        .unwrap();
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 0.7]);
        let noise = SpdMatrix::from_diagonal(&DVector::from_vec(vec![0.25])).unwrap();
        let lik = GaussianLikelihood::new(
            LinearModel::new(a),
            noise,
            DVector::from_vec(vec![0.9]),
        )
        .unwrap();
        Toy { prior, lik }
    }

    fn projector(toy: &Toy, rank: usize) -> RankRProjector {
        let h = toy.lik.fisher(&DVector::zeros(2)).unwrap();
        let pairs = generalized_eig(&h, toy.prior.precision()).unwrap();
        RankRProjector::from_pairs(&pairs, toy.prior.precision(), rank).unwrap()
    }

    #[test]
    fn single_sample_modes_agree_with_full_likelihood() {
        let t = toy();
        let proj = projector(&t, 1);
        let mut rng = seeded(1);
        let red_l = ReducedLikelihood::frozen(&proj, &t.prior, &t.lik, 1, &mut rng).unwrap();
        let mut rng = seeded(1);
        let red_f =
            ReducedLikelihood::frozen_forward(&proj, &t.prior, &t.lik, 1, &mut rng).unwrap();
        assert_eq!(red_l.frozen_samples()[0], red_f.frozen_samples()[0]);

        let xr = proj.apply(&DVector::from_vec(vec![0.8, 0.1]));
        let full = t
            .lik
            .log_likelihood(&(&xr + &red_l.frozen_samples()[0]))
            .unwrap();
        assert_relative_eq!(red_l.reduced_log_likelihood(&xr).unwrap(), full, epsilon = 1e-12);
        assert_relative_eq!(red_f.reduced_log_likelihood(&xr).unwrap(), full, epsilon = 1e-12);
    }

    #[test]
    fn ridge_likelihood_is_independent_of_the_set() {
        // Observation operator annihilates Ker(P): G(x) = G(Px). Use the
        // informed direction itself as the observation row.
        let prior = GaussianPrior::standard(2);
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let lik = GaussianLikelihood::new(
            LinearModel::new(a),
            SpdMatrix::identity(1),
            DVector::from_vec(vec![0.3]),
        )
        .unwrap();
        let h = lik.fisher(&DVector::zeros(2)).unwrap();
        let pairs = generalized_eig(&h, prior.precision()).unwrap();
        let proj = RankRProjector::from_pairs(&pairs, prior.precision(), 1).unwrap();

        let xr = proj.apply(&DVector::from_vec(vec![-0.4, 0.0]));
        let full = lik.log_likelihood(&xr).unwrap();
        for n in [1usize, 7] {
            let mut rng = seeded(7);
            let red = ReducedLikelihood::frozen(&proj, &prior, &lik, n, &mut rng).unwrap();
            assert_relative_eq!(red.reduced_log_likelihood(&xr).unwrap(), full, epsilon = 1e-9);
            let mut rng = seeded(8);
            let red_f =
                ReducedLikelihood::frozen_forward(&proj, &prior, &lik, n, &mut rng).unwrap();
            assert_relative_eq!(
                red_f.reduced_log_likelihood(&xr).unwrap(),
                full,
                epsilon = 1e-9
            );
            // Fresh draws do not change the value either.
            let mut rng = seeded(99);
            let (fresh, _) = red.fresh_reduced_log_likelihood(&xr, &mut rng).unwrap();
            assert_relative_eq!(fresh, full, epsilon = 1e-9);
        }
    }

    /// Closed-form `𝓛*(x_r) = E[𝓛(x_r + X_⊥)]`: convolving the Gaussian
    /// misfit with the Gaussian complement gives the density of
    /// `N(A x_r + A μ_⊥, Σ_obs + A C_⊥ Aᵀ)` at the data.
    fn optimal_log_likelihood(t: &Toy, proj: &RankRProjector, xr: &DVector<f64>) -> f64 {
        let p = proj.to_dense();
        let q = DMatrix::identity(2, 2) - &p;
        let mu_perp = &q * t.prior.mean();
        let c_perp = &q * t.prior.cov().matrix() * q.transpose();
        let a = t.lik.model().matrix();
        let mean = a * (xr + mu_perp);
        let var = (a * c_perp * a.transpose())[(0, 0)] + t.lik.noise().matrix()[(0, 0)];
        let d = t.lik.data()[0] - mean[0];
        -0.5 * d * d / var - 0.5 * ((2.0 * std::f64::consts::PI * var).ln())
    }

    #[test]
    fn frozen_average_converges_to_conditional_expectation() {
        let t = toy();
        let proj = projector(&t, 1);
        let xr = proj.apply(&DVector::from_vec(vec![0.5, -0.3]));
        let expect = optimal_log_likelihood(&t, &proj, &xr);

        let mut rng = seeded(42);
        let n = 20_000;
        let red = ReducedLikelihood::frozen(&proj, &t.prior, &t.lik, n, &mut rng).unwrap();
        let got = red.reduced_log_likelihood(&xr).unwrap();
        // MC rate: compare on the likelihood scale at ~1/√N.
        assert_relative_eq!(got.exp(), expect.exp(), max_relative = 0.05);
    }

    #[test]
    fn fresh_redraws_are_unbiased_for_the_optimal_likelihood() {
        let t = toy();
        let proj = projector(&t, 1);
        let xr = proj.apply(&DVector::from_vec(vec![1.1, 0.2]));
        let expect = optimal_log_likelihood(&t, &proj, &xr).exp();

        let mut rng = seeded(17);
        let red = ReducedLikelihood::frozen(&proj, &t.prior, &t.lik, 2, &mut rng).unwrap();
        let redraws = 10_000;
        let mut vals = Vec::with_capacity(redraws);
        for _ in 0..redraws {
            let (v, set) = red.fresh_reduced_log_likelihood(&xr, &mut rng).unwrap();
            assert_eq!(set.len(), 2);
            vals.push(v.exp());
        }
        let mean: f64 = vals.iter().sum::<f64>() / redraws as f64;
        let var: f64 =
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (redraws - 1) as f64;
        let se = (var / redraws as f64).sqrt();
        assert!(
            (mean - expect).abs() < 3.0 * se + 1e-12,
            "mean {mean} vs {expect} (3SE = {})",
            3.0 * se
        );
    }

    #[test]
    fn fresh_sets_are_seed_reproducible() {
        let t = toy();
        let proj = projector(&t, 1);
        let xr = proj.apply(&DVector::from_vec(vec![0.2, 0.2]));
        let make = || {
            let mut rng = seeded(5);
            let red = ReducedLikelihood::frozen(&proj, &t.prior, &t.lik, 3, &mut rng).unwrap();
            let mut rng = seeded(6);
            red.fresh_reduced_log_likelihood(&xr, &mut rng).unwrap()
        };
        let (v1, s1) = make();
        let (v2, s2) = make();
        assert_eq!(v1, v2);
        assert_eq!(s1, s2);
    }

    #[test]
    fn gradient_matches_finite_differences_in_both_modes() {
        let t = toy();
        let proj = projector(&t, 1);
        let mut rng = seeded(3);
        let red = ReducedLikelihood::frozen(&proj, &t.prior, &t.lik, 5, &mut rng).unwrap();
        let mut rng = seeded(3);
        let red_f =
            ReducedLikelihood::frozen_forward(&proj, &t.prior, &t.lik, 5, &mut rng).unwrap();

        let alpha = DVector::from_vec(vec![0.7]);
        for red in [&red, &red_f] {
            let xr = proj.embed(&alpha);
            let (val, grad) = red.reduced_log_likelihood_grad(&xr).unwrap();
            assert_relative_eq!(val, red.reduced_log_likelihood(&xr).unwrap(), epsilon = 1e-12);
            let fd = lis_testkit::fd::gradient(
                |a| red.reduced_log_likelihood(&proj.embed(a)).unwrap(),
                &alpha,
                1e-5,
            );
            assert_relative_eq!(grad, fd, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn full_rank_reduction_recovers_the_posterior_up_to_a_constant() {
        let t = toy();
        let proj = projector(&t, 2);
        let mut rng = seeded(11);
        let red = ReducedLikelihood::frozen(&proj, &t.prior, &t.lik, 4, &mut rng).unwrap();
        let mut rng = seeded(12);
        let mut diff0 = None;
        for _ in 0..100 {
            let x = crate::priors::Prior::sample(&t.prior, &mut rng);
            let approx = red.approx_posterior_log_density(&x).unwrap();
            let full = t.prior.log_density(&x) + t.lik.log_likelihood(&x).unwrap();
            let diff = approx - full;
            match diff0 {
                None => diff0 = Some(diff),
                Some(d0) => assert_relative_eq!(diff, d0, epsilon = 1e-8),
            }
        }
    }

    #[test]
    fn reduced_posterior_marginal_agrees_with_full_posterior_marginal() {
        // The conditional-expectation reduction preserves the subspace
        // marginal: ∫ π_pos(x_r + t u) dt ∝ 𝓛*(x_r) · marginal prior(x_r).
        // Both sides are normalized over a grid of α values by quadrature.
        let t = toy();
        let proj = projector(&t, 1);

        // Γ-orthonormal basis of Ker(P).
        let w = proj.cobasis().column(0).clone_owned();
        let mut u = DVector::from_vec(vec![-w[1], w[0]]);
        let unorm = (t.prior.precision().matrix() * &u).dot(&u).sqrt();
        u /= unorm;

        let alphas: Vec<f64> = (-8..=8).map(|i| 0.25 * i as f64).collect();
        let mut full = Vec::new();
        let mut reduced = Vec::new();
        for &a in &alphas {
            let xr = proj.embed(&DVector::from_vec(vec![a]));
            let joint = |tt: f64| {
                let x = &xr + &u * tt;
                (crate::priors::Prior::log_density(&t.prior, &x)
                    + t.lik.log_likelihood(&x).unwrap())
                .exp()
            };
            full.push(lis_testkit::quad::adaptive_simpson(&joint, -30.0, 30.0, 1e-12));
            let marg = t.prior.marginal_log_density(&proj, &xr).unwrap();
            reduced.push((optimal_log_likelihood(&t, &proj, &xr) + marg).exp());
        }
        let zf: f64 = full.iter().sum();
        let zr: f64 = reduced.iter().sum();
        for i in 0..alphas.len() {
            assert_relative_eq!(full[i] / zf, reduced[i] / zr, epsilon = 1e-6);
        }
    }

    #[test]
    fn forward_mode_sample_average_variance_identity() {
        // E over frozen-set redraws of the π_pr-weighted misfit error of
        // G̃_N equals (1 + 1/N) times the error of the optimal reduction.
        let t = toy();
        let proj = projector(&t, 1);
        let p = proj.to_dense();
        let q = DMatrix::identity(2, 2) - &p;
        let a = t.lik.model().matrix();
        let mu_perp = &q * t.prior.mean();
        let c_perp = &q * t.prior.cov().matrix() * q.transpose();
        let noise_inv = t.lik.noise().inverse();
        // E_x ‖A(x_⊥ - μ_⊥)‖²_{Σ⁻¹} = tr(Σ⁻¹ A C_⊥ Aᵀ): the optimal error.
        let base = (&noise_inv * a * &c_perp * a.transpose()).trace();

        let n = 4;
        let replications = 10_000;
        let mut rng = seeded(29);
        let mut acc = 0.0;
        for _ in 0..replications {
            let red =
                ReducedLikelihood::frozen_forward(&proj, &t.prior, &t.lik, n, &mut rng).unwrap();
            let mut sbar = DVector::zeros(2);
            for s in red.frozen_samples() {
                sbar += s;
            }
            sbar /= n as f64;
            let shift = a * (sbar - &mu_perp);
            acc += base + (&noise_inv * &shift).dot(&shift);
        }
        acc /= replications as f64;
        let expect = (1.0 + 1.0 / n as f64) * base;
        assert_relative_eq!(acc, expect, max_relative = 0.05);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let t = toy();
        let proj = projector(&t, 1);
        let mut rng = seeded(1);
        assert!(ReducedLikelihood::frozen(&proj, &t.prior, &t.lik, 0, &mut rng).is_err());

        let red = ReducedLikelihood::frozen(&proj, &t.prior, &t.lik, 2, &mut rng).unwrap();
        // Point outside Im(P).
        let bad = DVector::from_vec(vec![1.0, 1.0]);
        if proj.range_residual(&bad) > 1e-6 {
            assert!(matches!(
                red.reduced_log_likelihood(&bad),
                Err(Error::NotInRange { .. })
            ));
        }
        // Per-sample terms are likelihood-mode only.
        let mut rng = seeded(2);
        let red_f =
            ReducedLikelihood::frozen_forward(&proj, &t.prior, &t.lik, 2, &mut rng).unwrap();
        let xr = proj.apply(&DVector::zeros(2));
        assert!(red_f
            .per_sample_log_likelihoods(&xr, red_f.frozen_samples())
            .is_err());
    }
}
