//! `lis sample`: runs one MCMC method from a config against stored data,
//! writing per-seed chain files and a run manifest.
//!
//! Subspace methods (`ol`, `pm`, `of`, `da`) consume a projector directory
//! produced by `build-subspace`; its metric hash is recomputed from the
//! config and must match, otherwise the run is refused. Full-space methods
//! (`pcn`, `hmala`) need no projector.

use super::{report_done, resolve_output};
use crate::artifacts::{self, RunEntry, RunManifest, MANIFEST_JSON};
use crate::config::{ExperimentConfig, KernelKind, Method, SamplerSpec};
use crate::error::{config_err, CliError, Result};
use crate::problem::{EffectivePrior, LikelihoodInstance, ProblemInstance, Space};
use crate::STREAM_FROZEN;
use clap::Args;
use lis_core::diagnostics::pm_quality;
use lis_core::reduced::ReducedLikelihood;
use lis_core::rng::derived;
use lis_core::samplers::{
    delayed_acceptance_mh, gauss_newton_map, hmala, lift_chain, pcn_mh, pseudo_marginal_mh,
    pseudo_marginal_recycled, subspace_mala_kernel, subspace_mh, ProposalKernel, RandomWalkKernel,
};
use nalgebra::{DMatrix, DVector};
use std::path::PathBuf;
use std::time::Instant;

/// Redraw count for the pseudo-marginal quality monitor `sd[log 𝓛̃_N]`.
const PM_QUALITY_REDRAWS: usize = 32;

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (defaults to the config's output_dir).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Projector directory from `build-subspace` (subspace methods).
    #[arg(long)]
    pub projector: Option<PathBuf>,
    /// Data directory from `simulate-data`.
    #[arg(long)]
    pub data: PathBuf,
    /// Run this single seed instead of the config's seed list.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Start from the last state of an existing chain file.
    #[arg(long)]
    pub init_from_chain: Option<PathBuf>,
}

pub fn run_sample(args: &SampleArgs) -> Result<()> {
    let config = ExperimentConfig::load(&args.config)?;
    let Some(sampler) = config.sampler.clone() else {
        return config_err("sample needs a sampler spec in the config");
    };
    if sampler.steps == 0 {
        return config_err("sampler.steps must be positive");
    }
    let out = resolve_output(&args.output, &config)?;
    artifacts::ensure_dir(&out)?;

    let problem = ProblemInstance::build(&config.problem)?;
    let fingerprint = config.problem_fingerprint();
    let dim = problem.dim();

    let (y, data_sidecar) = artifacts::load_data(&args.data)?;
    if data_sidecar.problem_fingerprint != fingerprint {
        return Err(CliError::HashMismatch {
            what: "data problem fingerprint",
            expected: fingerprint,
            found: data_sidecar.problem_fingerprint,
        });
    }

    let needs_proj = sampler.method.needs_projector();
    let space = if needs_proj {
        let red = config.reduction.as_ref().ok_or_else(|| CliError::Config {
            message: "subspace methods need a reduction spec in the config".to_string(),
        })?;
        Space::for_kind(red.kind)
    } else if problem.gaussian_prior().is_some() {
        Space::X
    } else {
        // Full-space Gaussian-reference samplers on a product prior run in
        // the normalized variables (config validation guarantees the
        // reduction spec says so).
        Space::Z
    };

    let lik = problem.likelihood(y, space)?;
    let eff_prior = problem.effective_prior(space);

    let proj_data = if needs_proj {
        let dir = args.projector.as_ref().ok_or_else(|| CliError::MissingInput {
            message: format!(
                "the {} method needs --projector <dir from build-subspace>",
                sampler.method.as_str()
            ),
        })?;
        let (projector, sidecar) = artifacts::load_projector(dir)?;
        let expected = problem.metric_hash(&fingerprint, space);
        if sidecar.metric_hash != expected {
            return Err(CliError::HashMismatch {
                what: "projector metric hash",
                expected,
                found: sidecar.metric_hash,
            });
        }
        if projector.dim() != dim {
            return Err(CliError::IncompatibleRuns {
                message: format!(
                    "projector dimension {} does not match the problem dimension {dim}",
                    projector.dim()
                ),
            });
        }
        Some((projector, sidecar))
    } else {
        None
    };

    let reduced = if let Some((proj, _)) = proj_data.as_ref() {
        let red = config.reduction.as_ref().expect("checked above");
        let mut frozen_rng = derived(red.seed, STREAM_FROZEN);
        Some(match (sampler.method, &lik) {
            (Method::Of, LikelihoodInstance::Linear(l)) => ReducedLikelihood::frozen_forward(
                proj,
                eff_prior.as_dyn(),
                l,
                sampler.n,
                &mut frozen_rng,
            )?,
            (Method::Of, LikelihoodInstance::Elliptic(l)) => ReducedLikelihood::frozen_forward(
                proj,
                eff_prior.as_dyn(),
                l,
                sampler.n,
                &mut frozen_rng,
            )?,
            (Method::Of, _) => {
                return config_err("the reduced-forward method needs Gaussian observations")
            }
            _ => ReducedLikelihood::frozen(
                proj,
                eff_prior.as_dyn(),
                lik.as_dyn(),
                sampler.n,
                &mut frozen_rng,
            )?,
        })
    } else {
        None
    };

    // Fixed MALA preconditioner: the Fisher information at an anchor point
    // (the Gauss–Newton optimum when it is reachable, the prior center
    // otherwise). Any fixed anchor keeps the kernel valid.
    let fisher_anchor = if needs_proj && sampler.kernel == KernelKind::Mala {
        let anchor = match eff_prior.as_gaussian() {
            Some(g) => {
                gauss_newton_map(g, lik.as_dyn(), g.mean()).unwrap_or_else(|_| g.mean().clone())
            }
            None => DVector::zeros(dim),
        };
        Some(lik.as_dyn().fisher(&anchor)?)
    } else {
        None
    };

    let init_full = initial_state(args, &problem, &eff_prior, &proj_data)?;
    let init_sub = proj_data.as_ref().map(|(p, _)| p.apply(&init_full));

    let seeds: Vec<u64> = match args.seed {
        Some(s) => vec![s],
        None => config.seeds.clone(),
    };
    let n_hdr = needs_proj.then_some(sampler.n);
    let rank_hdr = proj_data.as_ref().map(|(p, _)| p.rank());

    let mut entries = Vec::with_capacity(seeds.len());
    for &seed in &seeds {
        let start = Instant::now();
        let (chain, full, stage2, pm_sd) = match sampler.method {
            Method::Ol | Method::Of => {
                let reduced = reduced.as_ref().expect("subspace method");
                let (proj, _) = proj_data.as_ref().expect("subspace method");
                let mut kernel = make_kernel(&sampler, reduced, fisher_anchor.as_ref())?;
                let init = init_sub.as_ref().expect("subspace method");
                let chain = subspace_mh(reduced, &mut *kernel, sampler.steps, init, seed)?;
                let full = lift_chain(&chain, eff_prior.as_dyn(), proj, seed)?;
                (chain, Some(full), None, None)
            }
            Method::Pm => {
                let reduced = reduced.as_ref().expect("subspace method");
                let (proj, _) = proj_data.as_ref().expect("subspace method");
                let mut kernel = make_kernel(&sampler, reduced, fisher_anchor.as_ref())?;
                let init = init_sub.as_ref().expect("subspace method");
                let (marginal, full) = if sampler.recycle {
                    let (m, f) =
                        pseudo_marginal_recycled(reduced, &mut *kernel, sampler.steps, init, seed)?;
                    (m, Some(f))
                } else {
                    let pm = pseudo_marginal_mh(reduced, &mut *kernel, sampler.steps, init, seed)?;
                    (pm.into_chain(), None)
                };
                let probe = proj.embed(marginal.state(marginal.len() - 1));
                let sd = pm_quality(reduced, &[probe], PM_QUALITY_REDRAWS, seed)?[0];
                (marginal, full, None, Some(sd))
            }
            Method::Da => {
                let reduced = reduced.as_ref().expect("subspace method");
                let mut kernel = make_kernel(&sampler, reduced, fisher_anchor.as_ref())?;
                let da = delayed_acceptance_mh(
                    reduced,
                    lik.as_dyn(),
                    &mut *kernel,
                    sampler.steps,
                    &init_full,
                    seed,
                )?;
                let stats = (da.stage2_mean_beta(), da.stage2_evals());
                (da.into_chain(), None, Some(stats), None)
            }
            Method::Pcn => {
                let g = eff_prior.as_gaussian().expect("validated at config load");
                let chain = pcn_mh(g, lik.as_dyn(), sampler.step, sampler.steps, &init_full, seed)?;
                (chain, None, None, None)
            }
            Method::Hmala => {
                let g = eff_prior.as_gaussian().expect("validated at config load");
                let chain = hmala(g, lik.as_dyn(), sampler.step, sampler.steps, &init_full, seed)?;
                (chain, None, None, None)
            }
        };

        let chain_name = artifacts::chain_file_name(seed);
        artifacts::save_chain(&out.join(&chain_name), &chain, n_hdr, rank_hdr)?;
        let full_name = full
            .as_ref()
            .map(|f| -> Result<String> {
                let name = artifacts::full_chain_file_name(seed);
                artifacts::save_chain(&out.join(&name), f, n_hdr, rank_hdr)?;
                Ok(name)
            })
            .transpose()?;

        entries.push(RunEntry {
            seed,
            chain_file: chain_name,
            full_chain_file: full_name,
            acceptance_rate: chain.acceptance_rate(),
            stage2_mean_beta: stage2.map(|(beta, _)| beta),
            stage2_evals: stage2.map(|(_, evals)| evals),
            pm_log_likelihood_sd: pm_sd,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
    }

    let kernel_label = match sampler.method {
        Method::Pcn => "pcn".to_string(),
        Method::Hmala => "hmala".to_string(),
        _ => match sampler.kernel {
            KernelKind::Mala => "mala",
            KernelKind::RandomWalk => "random_walk",
        }
        .to_string(),
    };
    let mut notes = Vec::new();
    if sampler.method == Method::Pm {
        notes.push(format!(
            "pseudo-marginal run with N = {}: the subspace marginal is exact for every N >= 1, \
             including N = 1; larger N only tightens the estimator and improves mixing",
            sampler.n
        ));
    }
    let manifest = RunManifest {
        method: sampler.method.as_str().to_string(),
        kernel: kernel_label,
        problem_fingerprint: fingerprint,
        reduction_kind: (needs_proj || space == Space::Z)
            .then(|| config.reduction.as_ref().map(|r| r.kind.as_str().to_string()))
            .flatten(),
        rank: rank_hdr,
        n: n_hdr,
        steps: sampler.steps,
        step_size: sampler.step,
        recycle: (sampler.method == Method::Pm).then_some(sampler.recycle),
        projector_metric_hash: proj_data.as_ref().map(|(_, s)| s.metric_hash.clone()),
        data_sha256: data_sidecar.data_sha256,
        notes,
        runs: entries,
    };
    artifacts::write_json(&out.join(MANIFEST_JSON), &manifest)?;
    report_done(
        &format!("{} chains for {} seed(s)", sampler.method.as_str(), seeds.len()),
        &out,
    );
    Ok(())
}

/// The full-space starting point: the last state of `--init-from-chain`
/// (subspace chains are embedded through the projector), or the prior center.
fn initial_state(
    args: &SampleArgs,
    problem: &ProblemInstance,
    eff_prior: &EffectivePrior,
    proj_data: &Option<(lis_core::linalg::RankRProjector, artifacts::ProjectorSidecar)>,
) -> Result<DVector<f64>> {
    let dim = problem.dim();
    match &args.init_from_chain {
        Some(path) => {
            let (_, prev) = artifacts::load_chain(path)?;
            if prev.len() == 0 {
                return Err(CliError::Format {
                    path: path.clone(),
                    message: "initialization chain holds no states".to_string(),
                });
            }
            let last = prev.state(prev.len() - 1).clone();
            if last.len() == dim {
                Ok(last)
            } else if let Some((proj, _)) = proj_data.as_ref() {
                if last.len() == proj.rank() {
                    Ok(proj.embed(&last))
                } else {
                    Err(CliError::IncompatibleRuns {
                        message: format!(
                            "initialization chain dimension {} matches neither the problem \
                             dimension {dim} nor the projector rank {}",
                            last.len(),
                            proj.rank()
                        ),
                    })
                }
            } else {
                Err(CliError::IncompatibleRuns {
                    message: format!(
                        "initialization chain dimension {} does not match the problem dimension {dim}",
                        last.len()
                    ),
                })
            }
        }
        None => Ok(match eff_prior.as_gaussian() {
            Some(g) => g.mean().clone(),
            None => DVector::zeros(dim),
        }),
    }
}

fn make_kernel<'a>(
    spec: &SamplerSpec,
    reduced: &'a ReducedLikelihood<'a>,
    fisher_anchor: Option<&DMatrix<f64>>,
) -> Result<Box<dyn ProposalKernel + 'a>> {
    let rank = reduced.projector().rank();
    match spec.kernel {
        KernelKind::RandomWalk => Ok(Box::new(RandomWalkKernel::new(rank, spec.step)?)),
        KernelKind::Mala => {
            let fisher = fisher_anchor.expect("Fisher anchor is computed for MALA kernels");
            Ok(Box::new(subspace_mala_kernel(reduced, fisher, spec.step)?))
        }
    }
}
