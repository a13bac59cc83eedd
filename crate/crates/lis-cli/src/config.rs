//! Experiment configuration: a single JSON file per experiment, schema-
//! validated before any computation runs. Unknown keys are rejected
//! everywhere. An object may contain `"$include": "relative/path.json"`;
//! the referenced file (itself resolved recursively) is merged in first and
//! sibling keys override its entries, so shared problem specs live in one
//! file.

use crate::error::{config_err, io_err, CliError, Result};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use std::path::{Path, PathBuf};

/// Guards against include cycles.
const MAX_INCLUDE_DEPTH: usize = 16;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub reduction: Option<ReductionSpec>,
    #[serde(default)]
    pub sampler: Option<SamplerSpec>,
    /// Replicate master seeds; each yields one chain in `sample`.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Default output directory, overridable by `--output`.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// Seed-generated linear forward model with Gaussian prior and noise.
    LinearGaussian {
        dim: usize,
        dim_obs: usize,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prior: Option<PriorSpec>,
    },
    /// Log-conductivity inversion for `−∇·(e^x ∇p) = f` on the unit square.
    Elliptic {
        n: usize,
        obs_per_side: usize,
        snr: f64,
        /// Explicit observation-noise σ; defaults to the SNR calibration
        /// against the prior-mean signal.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise_sigma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prior: Option<PriorSpec>,
    },
    /// Transmission tomography with Poisson counts and a wavelet prior.
    Pet {
        n: usize,
        n_sources: usize,
        rays_per_source: usize,
        source_radius: f64,
        detector_radius: f64,
        arc_degrees: f64,
        intensity: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prior: Option<PriorSpec>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    /// Gaussian prior: either a dense mean/covariance pair (linear-Gaussian
    /// problem only) or an SPDE precision spec (elliptic problem only).
    Gaussian {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        covariance: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spde: Option<SpdeSpec>,
    },
    /// I.i.d. generalized-Gaussian coefficients (density ∝ exp(−γ|x|^p)).
    ProductGg { p: f64, gamma: f64 },
    /// Wavelet expansion with level weights `2^{−j(s + 1/2 − 1/p)}` and
    /// i.i.d. generalized-Gaussian coefficients.
    Besov {
        #[serde(default = "default_smoothness")]
        smoothness: f64,
        #[serde(default = "default_one")]
        integrability: f64,
        #[serde(default = "default_one")]
        gamma: f64,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpdeSpec {
    pub gamma: f64,
}

fn default_smoothness() -> f64 {
    2.0
}

fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionSpec {
    pub kind: ReductionKind,
    /// Monte Carlo sample count K for the averaged Fisher/score matrix.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Target for the certified KL bound; the string `"inf"` selects the
    /// minimum rank 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Epsilon>,
    /// Explicit rank; takes precedence over `epsilon`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    /// Cap for `epsilon`-driven rank selection (default: full dimension).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rank: Option<usize>,
    /// Prior log-Sobolev constant entering the bound `(κ/2)·Σ_{i>r} λ_i`.
    #[serde(default = "default_one")]
    pub kappa: f64,
    /// Seed for the offline Monte Carlo draws and the frozen complement set.
    #[serde(default)]
    pub seed: u64,
    /// Steps dropped from the head of the posterior chain consumed by the
    /// `data_dependent` kind.
    #[serde(default)]
    pub burn_in: usize,
    /// Thinning stride applied to that chain.
    #[serde(default = "default_thin")]
    pub thin: usize,
}

fn default_k() -> usize {
    1000
}

fn default_thin() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionKind {
    /// Prior-averaged Fisher information; needs no data.
    DataFree,
    /// Posterior-averaged outer products of likelihood scores; needs a
    /// posterior chain and the observed data.
    DataDependent,
    /// Truncated eigendecomposition of the prior covariance; needs no data
    /// and no likelihood.
    PriorBased,
    /// Coordinate selection by diagonal informativeness scores.
    Coordinate,
    /// Data-free construction in the normalized (standard Gaussian)
    /// variables of a product prior.
    Normalized,
}

impl ReductionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReductionKind::DataFree => "data_free",
            ReductionKind::DataDependent => "data_dependent",
            ReductionKind::PriorBased => "prior_based",
            ReductionKind::Coordinate => "coordinate",
            ReductionKind::Normalized => "normalized",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub method: Method,
    /// Complement-set size N for the reduced-likelihood estimate.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Chain length (post-init MH updates).
    pub steps: usize,
    /// Subspace proposal kernel; ignored by `pcn` and `hmala`, which carry
    /// their own proposal mechanisms.
    #[serde(default)]
    pub kernel: KernelKind,
    /// Step size: MALA/random-walk scale, or β ∈ (0, 1] for pCN.
    pub step: f64,
    /// For `pm`: also emit the recycled exact full-space chain.
    #[serde(default = "default_true")]
    pub recycle: bool,
}

fn default_n() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Subspace MH against the frozen reduced likelihood, lifted to full
    /// space by conditional prior draws (targets the approximate posterior).
    Ol,
    /// Pseudo-marginal MH with fresh complement sets (exact subspace
    /// marginal), optionally recycled into exact full-space samples.
    Pm,
    /// Subspace MH against the frozen reduced forward model (Gaussian
    /// observations only).
    Of,
    /// Delayed acceptance: reduced-likelihood screen, exact second stage.
    Da,
    /// Preconditioned Crank–Nicolson on the full space.
    Pcn,
    /// Full-space MALA preconditioned by the Gauss–Newton Hessian at the
    /// MAP point.
    Hmala,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ol => "ol",
            Method::Pm => "pm",
            Method::Of => "of",
            Method::Da => "da",
            Method::Pcn => "pcn",
            Method::Hmala => "hmala",
        }
    }

    /// Methods that run their proposal chain on the informed subspace and
    /// therefore need a projector artifact.
    pub fn needs_projector(self) -> bool {
        !matches!(self, Method::Pcn | Method::Hmala)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[default]
    Mala,
    RandomWalk,
}

impl KernelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::Mala => "mala",
            KernelKind::RandomWalk => "random_walk",
        }
    }
}

/// A positive KL-bound target; JSON accepts a number or the strings
/// `"inf"` / `"infinity"` (JSON itself has no infinity literal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epsilon(pub f64);

impl Serialize for Epsilon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for Epsilon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        let v = match Raw::deserialize(d)? {
            Raw::Number(x) => x,
            Raw::Text(s) => match s.to_ascii_lowercase().as_str() {
                "inf" | "infinity" => f64::INFINITY,
                _ => {
                    return Err(serde::de::Error::custom(format!(
                        "epsilon must be a positive number or \"inf\", got \"{s}\""
                    )))
                }
            },
        };
        if v > 0.0 {
            Ok(Epsilon(v))
        } else {
            Err(serde::de::Error::custom(format!(
                "epsilon must be positive, got {v}"
            )))
        }
    }
}

impl ExperimentConfig {
    /// Loads, resolves `$include` directives, and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let value = load_value(path, 0)?;
        let config: ExperimentConfig =
            serde_json::from_value(value).map_err(|e| CliError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        config.validate()?;
        Ok(config)
    }

    /// Internal-consistency checks that the schema cannot express.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return config_err("seeds must contain at least one entry");
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return config_err("seeds must be distinct");
        }
        self.problem.validate()?;
        if let Some(r) = &self.reduction {
            r.validate(&self.problem)?;
        }
        if let Some(s) = &self.sampler {
            s.validate(&self.problem, self.reduction.as_ref())?;
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical problem spec (defaults materialized),
    /// used to bind data files, projectors, and run manifests to the
    /// generating problem.
    pub fn problem_fingerprint(&self) -> String {
        self.problem.fingerprint()
    }
}

impl ProblemSpec {
    fn validate(&self) -> Result<()> {
        match self {
            ProblemSpec::LinearGaussian {
                dim,
                dim_obs,
                prior,
                ..
            } => {
                match prior {
                    None => {}
                    Some(PriorSpec::Gaussian {
                        mean,
                        covariance,
                        spde,
                    }) => {
                        if spde.is_some() {
                            return config_err(
                                "the SPDE prior spec applies to the elliptic problem only",
                            );
                        }
                        if mean.is_none() != covariance.is_none() {
                            return config_err(
                                "a dense Gaussian prior needs both mean and covariance",
                            );
                        }
                        if let Some(m) = mean {
                            if m.len() != *dim {
                                return config_err(format!(
                                    "prior mean has length {}, problem dimension is {dim}",
                                    m.len()
                                ));
                            }
                        }
                        if let Some(c) = covariance {
                            if c.len() != *dim || c.iter().any(|row| row.len() != *dim) {
                                return config_err(format!(
                                    "prior covariance must be {dim}×{dim}"
                                ));
                            }
                        }
                    }
                    Some(_) => {
                        return config_err(
                            "the linear-Gaussian problem requires a Gaussian prior",
                        )
                    }
                }
                if *dim == 0 || *dim_obs == 0 {
                    return config_err("problem dimensions must be positive");
                }
                Ok(())
            }
            ProblemSpec::Elliptic { prior, .. } => match prior {
                None
                | Some(PriorSpec::Gaussian {
                    mean: None,
                    covariance: None,
                    ..
                }) => Ok(()),
                Some(PriorSpec::Gaussian { .. }) => config_err(
                    "the elliptic problem takes its Gaussian prior as an SPDE spec, not dense",
                ),
                Some(_) => config_err("the elliptic problem requires a Gaussian (SPDE) prior"),
            },
            ProblemSpec::Pet { prior, .. } => match prior {
                None | Some(PriorSpec::Besov { .. }) | Some(PriorSpec::ProductGg { .. }) => Ok(()),
                Some(PriorSpec::Gaussian { .. }) => {
                    config_err("the tomography problem requires a Besov or product prior")
                }
            },
        }
    }

    /// Copy with default priors spelled out, so a fingerprint does not
    /// depend on whether defaults were written explicitly.
    pub fn resolved(&self) -> ProblemSpec {
        let mut spec = self.clone();
        match &mut spec {
            ProblemSpec::LinearGaussian { .. } => {}
            ProblemSpec::Elliptic { prior, .. } => {
                let gamma = elliptic_spde_gamma(prior);
                *prior = Some(PriorSpec::Gaussian {
                    mean: None,
                    covariance: None,
                    spde: Some(SpdeSpec { gamma }),
                });
            }
            ProblemSpec::Pet { prior, .. } => {
                *prior = Some(resolve_pet_prior(prior));
            }
        }
        spec
    }

    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(&self.resolved())
            .expect("problem specs always serialize");
        crate::artifacts::sha256_hex(&canonical)
    }
}

/// SPDE precision weight γ for the elliptic prior (default 10).
pub fn elliptic_spde_gamma(prior: &Option<PriorSpec>) -> f64 {
    match prior {
        Some(PriorSpec::Gaussian {
            spde: Some(SpdeSpec { gamma }),
            ..
        }) => *gamma,
        _ => 10.0,
    }
}

/// PET prior parameters `(smoothness, integrability, coefficient p,
/// coefficient γ)` with the Laplace-coefficient default.
pub fn resolve_pet_prior(prior: &Option<PriorSpec>) -> PriorSpec {
    match prior {
        Some(PriorSpec::Besov {
            smoothness,
            integrability,
            gamma,
        }) => PriorSpec::Besov {
            smoothness: *smoothness,
            integrability: *integrability,
            gamma: *gamma,
        },
        Some(PriorSpec::ProductGg { p, gamma }) => PriorSpec::ProductGg {
            p: *p,
            gamma: *gamma,
        },
        _ => PriorSpec::Besov {
            smoothness: 2.0,
            integrability: 1.0,
            gamma: 1.0,
        },
    }
}

impl ReductionSpec {
    fn validate(&self, problem: &ProblemSpec) -> Result<()> {
        if self.k == 0 {
            return config_err("reduction.k must be at least 1");
        }
        if self.thin == 0 {
            return config_err("reduction.thin must be at least 1");
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return config_err(format!(
                "reduction.kappa must be positive and finite, got {}",
                self.kappa
            ));
        }
        if let Some(r) = self.rank {
            if r == 0 {
                return config_err("reduction.rank must be at least 1");
            }
        }
        if let Some(m) = self.max_rank {
            if m == 0 {
                return config_err("reduction.max_rank must be at least 1");
            }
        }
        let product_prior = matches!(problem, ProblemSpec::Pet { .. });
        match self.kind {
            ReductionKind::Normalized if !product_prior => config_err(
                "the normalized reduction applies to product priors; \
                 Gaussian-prior problems are already in normalized form",
            ),
            ReductionKind::DataFree | ReductionKind::DataDependent | ReductionKind::PriorBased
                if product_prior =>
            {
                config_err(
                    "eigenvector reductions need a Gaussian prior; use the coordinate or \
                     normalized kind for product priors",
                )
            }
            _ => Ok(()),
        }
    }
}

impl SamplerSpec {
    fn validate(&self, problem: &ProblemSpec, reduction: Option<&ReductionSpec>) -> Result<()> {
        if self.steps == 0 {
            return config_err("sampler.steps must be at least 1");
        }
        if self.n == 0 {
            return config_err("sampler.n must be at least 1");
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return config_err(format!(
                "sampler.step must be positive and finite, got {}",
                self.step
            ));
        }
        if self.method == Method::Pcn && self.step > 1.0 {
            return config_err(format!(
                "pCN interprets step as β ∈ (0, 1], got {}",
                self.step
            ));
        }
        let normalized = reduction.map(|r| r.kind) == Some(ReductionKind::Normalized);
        match (self.method, problem) {
            (Method::Of, ProblemSpec::Pet { .. }) => config_err(
                "the reduced-forward method assumes Gaussian observations; \
                 the tomography problem has Poisson counts",
            ),
            (Method::Pcn | Method::Hmala, ProblemSpec::Pet { .. }) if !normalized => config_err(
                "pCN and Hessian-MALA need a Gaussian reference; on the tomography problem \
                 configure reduction.kind = \"normalized\"",
            ),
            _ => Ok(()),
        }
    }
}

/// Reads a JSON file and resolves every `$include` directive, relative to
/// the including file's directory.
fn load_value(path: &Path, depth: usize) -> Result<Value> {
    if depth > MAX_INCLUDE_DEPTH {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            message: format!("include depth exceeds {MAX_INCLUDE_DEPTH} (include cycle?)"),
        });
    }
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    resolve_includes(value, base, path, depth)
}

fn resolve_includes(value: Value, base: &Path, origin: &Path, depth: usize) -> Result<Value> {
    match value {
        Value::Object(map) => {
            let mut merged = serde_json::Map::new();
            if let Some(inc) = map.get("$include") {
                let rel = inc.as_str().ok_or_else(|| CliError::Parse {
                    path: origin.to_path_buf(),
                    message: "$include must be a path string".to_string(),
                })?;
                let target = base.join(rel);
                let included = load_value(&target, depth + 1)?;
                match included {
                    Value::Object(inner) => merged.extend(inner),
                    _ => {
                        return Err(CliError::Parse {
                            path: target,
                            message: "included file must contain a JSON object".to_string(),
                        })
                    }
                }
            }
            for (key, inner) in map {
                if key == "$include" {
                    continue;
                }
                merged.insert(key, resolve_includes(inner, base, origin, depth)?);
            }
            Ok(Value::Object(merged))
        }
        Value::Array(items) => Ok(Value::Array(
            items
                .into_iter()
                .map(|v| resolve_includes(v, base, origin, depth))
                .collect::<Result<_>>()?,
        )),
        other => Ok(other),
    }
}
