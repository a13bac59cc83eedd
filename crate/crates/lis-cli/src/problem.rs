//! Instantiates problems, priors, and likelihoods from a config spec, and
//! defines the metric hash that binds offline artifacts to the generating
//! problem.

use crate::config::{
    elliptic_spde_gamma, resolve_pet_prior, PriorSpec, ProblemSpec, ReductionKind,
};
use crate::error::{config_err, Result};
use lis_core::linalg::SpdMatrix;
use lis_core::models::{
    GaussianLikelihood, LikelihoodModel, LinearModel, PoissonLikelihood, TransformedLikelihood,
};
use lis_core::priors::{GaussianPrior, NormalizationMap, Prior, ProductGgPrior};
use lis_core::problems::{
    EllipticForward, EllipticProblem, LinearGaussianProblem, PetForward, PetGeometry, PetProblem,
    TruthAndData,
};
use lis_core::rng::seeded;
use nalgebra::{DMatrix, DVector};

/// Which variables a projector (and the chains built on it) lives in: the
/// problem's native parameters, or the normalized standard-Gaussian
/// variables of a product prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    X,
    Z,
}

impl Space {
    pub fn for_kind(kind: ReductionKind) -> Space {
        if kind == ReductionKind::Normalized {
            Space::Z
        } else {
            Space::X
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Space::X => "x",
            Space::Z => "z",
        }
    }
}

pub enum ProblemInstance {
    Linear(LinearGaussianProblem),
    Elliptic(EllipticProblem),
    Pet(PetProblem),
}

impl ProblemInstance {
    pub fn build(spec: &ProblemSpec) -> Result<Self> {
        match spec {
            ProblemSpec::LinearGaussian {
                dim,
                dim_obs,
                seed,
                prior,
            } => {
                let mut problem = LinearGaussianProblem::generate(*dim, *dim_obs, *seed)?;
                if let Some(PriorSpec::Gaussian {
                    mean: Some(mean),
                    covariance: Some(cov),
                    ..
                }) = prior
                {
                    let d = mean.len();
                    let cov = DMatrix::from_fn(d, d, |i, j| cov[i][j]);
                    let override_prior =
                        GaussianPrior::new(DVector::from_vec(mean.clone()), SpdMatrix::new(cov)?)?;
                    problem = problem.with_prior(override_prior)?;
                }
                Ok(ProblemInstance::Linear(problem))
            }
            ProblemSpec::Elliptic {
                n,
                obs_per_side,
                snr,
                noise_sigma,
                prior,
            } => {
                let gamma = elliptic_spde_gamma(prior);
                let mut problem = EllipticProblem::new(*n, *obs_per_side, gamma, *snr)?;
                if let Some(sigma) = noise_sigma {
                    problem = problem.with_noise_sigma(*sigma)?;
                }
                Ok(ProblemInstance::Elliptic(problem))
            }
            ProblemSpec::Pet {
                n,
                n_sources,
                rays_per_source,
                source_radius,
                detector_radius,
                arc_degrees,
                intensity,
                prior,
            } => {
                let geometry = PetGeometry {
                    n: *n,
                    n_sources: *n_sources,
                    rays_per_source: *rays_per_source,
                    source_radius: *source_radius,
                    detector_radius: *detector_radius,
                    arc_degrees: *arc_degrees,
                    intensity: *intensity,
                };
                let (s, p_weights, p_coeff, gamma) = match resolve_pet_prior(prior) {
                    PriorSpec::Besov {
                        smoothness,
                        integrability,
                        gamma,
                    } => (smoothness, integrability, integrability, gamma),
                    PriorSpec::ProductGg { p, gamma } => (2.0, 1.0, p, gamma),
                    PriorSpec::Gaussian { .. } => {
                        return config_err("the tomography problem cannot take a Gaussian prior")
                    }
                };
                Ok(ProblemInstance::Pet(PetProblem::with_prior(
                    geometry, s, p_weights, p_coeff, gamma,
                )?))
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ProblemInstance::Linear(p) => p.prior().dim(),
            ProblemInstance::Elliptic(p) => p.prior().dim(),
            ProblemInstance::Pet(p) => p.prior().dim(),
        }
    }

    /// The native (x-space) prior.
    pub fn prior_dyn(&self) -> &dyn Prior {
        match self {
            ProblemInstance::Linear(p) => p.prior(),
            ProblemInstance::Elliptic(p) => p.prior(),
            ProblemInstance::Pet(p) => p.prior(),
        }
    }

    pub fn gaussian_prior(&self) -> Option<&GaussianPrior> {
        match self {
            ProblemInstance::Linear(p) => Some(p.prior()),
            ProblemInstance::Elliptic(p) => Some(p.prior()),
            ProblemInstance::Pet(_) => None,
        }
    }

    pub fn product_prior(&self) -> Option<&ProductGgPrior> {
        match self {
            ProblemInstance::Pet(p) => Some(p.prior()),
            _ => None,
        }
    }

    /// The prior a sampler should use in the given space: the native prior
    /// in x-space, the standard Gaussian reference in z-space.
    pub fn effective_prior(&self, space: Space) -> EffectivePrior {
        match (space, self) {
            (Space::Z, _) => EffectivePrior::Gaussian(GaussianPrior::standard(self.dim())),
            (Space::X, ProblemInstance::Linear(p)) => EffectivePrior::Gaussian(p.prior().clone()),
            (Space::X, ProblemInstance::Elliptic(p)) => {
                EffectivePrior::Gaussian(p.prior().clone())
            }
            (Space::X, ProblemInstance::Pet(p)) => EffectivePrior::Product(p.prior().clone()),
        }
    }

    /// Coordinate-wise map from normalized variables to the native ones;
    /// present for product priors only.
    pub fn normalization_map(&self) -> Option<NormalizationMap> {
        self.product_prior().map(NormalizationMap::for_prior)
    }

    /// Subspace metric Γ in the given space: the prior precision for
    /// Gaussian priors, identity for product priors and normalized
    /// variables.
    pub fn metric(&self, space: Space) -> SpdMatrix {
        match (space, self.gaussian_prior()) {
            (Space::X, Some(g)) => g.precision().clone(),
            _ => SpdMatrix::from_diagonal(&DVector::from_element(self.dim(), 1.0))
                .expect("identity metric"),
        }
    }

    /// Hash binding a projector to (space, problem, metric); recomputed at
    /// sample time and compared against the projector sidecar.
    pub fn metric_hash(&self, fingerprint: &str, space: Space) -> String {
        let metric = self.metric(space);
        let m = metric.matrix();
        let mut bytes = Vec::with_capacity(16 + fingerprint.len() + m.len() * 8);
        bytes.extend_from_slice(b"space:");
        bytes.extend_from_slice(space.tag().as_bytes());
        bytes.push(b'\n');
        bytes.extend_from_slice(fingerprint.as_bytes());
        bytes.push(b'\n');
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                bytes.extend_from_slice(&m[(i, j)].to_le_bytes());
            }
        }
        crate::artifacts::sha256_hex(&bytes)
    }

    pub fn make_truth_and_data(&self, seed: u64) -> Result<TruthAndData> {
        let mut rng = seeded(seed);
        Ok(match self {
            ProblemInstance::Linear(p) => p.make_truth_and_data(&mut rng)?,
            ProblemInstance::Elliptic(p) => p.make_truth_and_data(&mut rng)?,
            ProblemInstance::Pet(p) => p.make_truth_and_data(&mut rng)?,
        })
    }

    /// Field representation of a parameter vector for plotting: the vector
    /// itself where parameters are grid values, the synthesized image for
    /// the wavelet-coefficient parameterization.
    pub fn field_of(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            ProblemInstance::Linear(_) | ProblemInstance::Elliptic(_) => x.clone(),
            ProblemInstance::Pet(p) => p.expansion().synthesize(x),
        }
    }

    /// Likelihood over the sampling space for an observation record.
    pub fn likelihood(&self, y: DVector<f64>, space: Space) -> Result<LikelihoodInstance> {
        match (self, space) {
            (ProblemInstance::Linear(p), Space::X) => {
                Ok(LikelihoodInstance::Linear(p.likelihood(y)?))
            }
            (ProblemInstance::Elliptic(p), Space::X) => {
                Ok(LikelihoodInstance::Elliptic(p.likelihood(y)?))
            }
            (ProblemInstance::Pet(p), Space::X) => Ok(LikelihoodInstance::Pet(p.likelihood(y)?)),
            (ProblemInstance::Pet(p), Space::Z) => {
                let map = NormalizationMap::for_prior(p.prior());
                Ok(LikelihoodInstance::PetNormalized(TransformedLikelihood::new(
                    p.likelihood(y)?,
                    map,
                )?))
            }
            (_, Space::Z) => config_err(
                "normalized variables are defined for product priors only",
            ),
        }
    }

    pub fn dim_obs(&self) -> usize {
        use lis_core::models::ForwardModel;
        match self {
            ProblemInstance::Linear(p) => p.model().matrix().nrows(),
            ProblemInstance::Elliptic(p) => p.forward().dim_out(),
            ProblemInstance::Pet(p) => p.forward().dim_out(),
        }
    }

    /// Likelihood with an all-zero data record, for the offline phase: the
    /// Fisher information does not involve the stored data, so data-free
    /// constructions can run before any observation exists.
    pub fn placeholder_likelihood(&self, space: Space) -> Result<LikelihoodInstance> {
        self.likelihood(DVector::zeros(self.dim_obs()), space)
    }

    /// Expected observation-noise σ recorded with simulated data; `None`
    /// where the noise law has no single σ (Poisson counts).
    pub fn noise_sigma(&self) -> Option<f64> {
        match self {
            ProblemInstance::Linear(_) => None,
            ProblemInstance::Elliptic(p) => Some(p.noise_sigma()),
            ProblemInstance::Pet(_) => None,
        }
    }
}

/// Owned sampler-facing prior (see [`ProblemInstance::effective_prior`]).
pub enum EffectivePrior {
    Gaussian(GaussianPrior),
    Product(ProductGgPrior),
}

impl EffectivePrior {
    pub fn as_dyn(&self) -> &dyn Prior {
        match self {
            EffectivePrior::Gaussian(p) => p,
            EffectivePrior::Product(p) => p,
        }
    }

    pub fn as_gaussian(&self) -> Option<&GaussianPrior> {
        match self {
            EffectivePrior::Gaussian(p) => Some(p),
            EffectivePrior::Product(_) => None,
        }
    }
}

/// Concrete likelihood in the sampling space. The concrete Gaussian variants
/// stay visible because the reduced-forward construction needs them.
pub enum LikelihoodInstance {
    Linear(GaussianLikelihood<LinearModel>),
    Elliptic(GaussianLikelihood<EllipticForward>),
    Pet(PoissonLikelihood<PetForward>),
    PetNormalized(TransformedLikelihood<PoissonLikelihood<PetForward>>),
}

impl LikelihoodInstance {
    pub fn as_dyn(&self) -> &dyn LikelihoodModel {
        match self {
            LikelihoodInstance::Linear(l) => l,
            LikelihoodInstance::Elliptic(l) => l,
            LikelihoodInstance::Pet(l) => l,
            LikelihoodInstance::PetNormalized(l) => l,
        }
    }
}
