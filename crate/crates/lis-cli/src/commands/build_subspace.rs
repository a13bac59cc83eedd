//! `lis build-subspace`: offline construction of the informed-subspace
//! projector, its eigenvalue spectrum, and a construction report.
//!
//! Offline/online separation is enforced: every kind except
//! `data_dependent` refuses `--data` and `--chain` outright.

use super::{report_done, resolve_output};
use crate::artifacts::{self, SubspaceReport, REPORT_JSON, SPECTRUM_CSV};
use crate::config::{ExperimentConfig, ReductionKind, ReductionSpec};
use crate::error::{config_err, CliError, Result};
use crate::problem::{ProblemInstance, Space};
use crate::STREAM_OFFLINE_H;
use clap::Args;
use lis_core::linalg::{generalized_eig, RankRProjector};
use lis_core::priors::Prior;
use lis_core::rng::derived;
use lis_core::subspace::{
    coordinate_scores, data_dependent_h, data_free_h, kl_bound, pullback_h, select_rank,
    top_indices,
};
use nalgebra::DVector;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct BuildSubspaceArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (defaults to the config's output_dir).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Posterior chain file consumed by the data_dependent kind.
    #[arg(long)]
    pub chain: Option<PathBuf>,
    /// Data directory consumed by the data_dependent kind.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

pub fn run_build_subspace(args: &BuildSubspaceArgs) -> Result<()> {
    let config = ExperimentConfig::load(&args.config)?;
    let Some(reduction) = config.reduction.clone() else {
        return config_err("build-subspace needs a reduction spec in the config");
    };

    if reduction.kind != ReductionKind::DataDependent {
        if args.chain.is_some() || args.data.is_some() {
            return config_err(format!(
                "the {} kind is constructed offline and must not be given --data or --chain",
                reduction.kind.as_str()
            ));
        }
    } else {
        if args.chain.is_none() {
            return Err(CliError::MissingInput {
                message: "the data_dependent kind needs --chain <posterior chain file>"
                    .to_string(),
            });
        }
        if args.data.is_none() {
            return Err(CliError::MissingInput {
                message: "the data_dependent kind needs --data <data directory>".to_string(),
            });
        }
    }

    let out = resolve_output(&args.output, &config)?;
    artifacts::ensure_dir(&out)?;

    let problem = ProblemInstance::build(&config.problem)?;
    let fingerprint = config.problem_fingerprint();
    let space = Space::for_kind(reduction.kind);
    let metric = problem.metric(space);
    let metric_hash = problem.metric_hash(&fingerprint, space);
    let built = build(&problem, &reduction, &config, args)?;

    let rank = resolve_rank(&built.spectrum, &reduction)?;
    let projector = match &built.vectors {
        Vectors::Pairs(pairs) => RankRProjector::from_pairs(pairs, &metric, rank)?,
        Vectors::Coordinates(order) => {
            let mut indices = order[..rank].to_vec();
            indices.sort_unstable();
            RankRProjector::coordinate(problem.dim(), &indices)?
        }
    };
    let bound_at_rank = if built.certified {
        Some(kl_bound(&built.spectrum, rank, reduction.kappa)?)
    } else {
        None
    };

    artifacts::save_projector(&out, &projector, &metric_hash, &built.spectrum)?;
    let rows: Vec<String> = built
        .spectrum
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{},{}", i + 1, artifacts::fmt_f64(*v)))
        .collect();
    artifacts::write_csv(&out.join(SPECTRUM_CSV), "index,lambda", &rows)?;
    artifacts::write_json(
        &out.join(REPORT_JSON),
        &SubspaceReport {
            k: built.k,
            kind: reduction.kind.as_str().to_string(),
            trace_history_tail: built.trace_tail,
            selected_rank: rank,
            bound_at_rank,
        },
    )?;
    report_done(
        &format!("{} subspace, rank {rank}", reduction.kind.as_str()),
        &out,
    );
    Ok(())
}

/// Spectrum plus the material to assemble a rank-r projector from it.
struct Built {
    /// Descending; generalized eigenvalues, prior eigenvalues, or sorted
    /// coordinate scores depending on the kind.
    spectrum: Vec<f64>,
    vectors: Vectors,
    /// Whether `(κ/2)·Σ_{i>r} spectrum_i` is a certified KL bound.
    certified: bool,
    k: usize,
    trace_tail: Vec<f64>,
}

enum Vectors {
    Pairs(lis_core::linalg::GeneralizedEigenPairs),
    /// Coordinate indices in descending score order.
    Coordinates(Vec<usize>),
}

fn build(
    problem: &ProblemInstance,
    reduction: &ReductionSpec,
    config: &ExperimentConfig,
    args: &BuildSubspaceArgs,
) -> Result<Built> {
    let space = Space::for_kind(reduction.kind);
    let metric = problem.metric(space);
    let mut rng = derived(reduction.seed, STREAM_OFFLINE_H);
    match reduction.kind {
        ReductionKind::DataFree => {
            let lik = problem.placeholder_likelihood(Space::X)?;
            let h = data_free_h(problem.prior_dyn(), lik.as_dyn(), reduction.k, &mut rng)?;
            let pairs = generalized_eig(h.matrix(), &metric)?;
            Ok(Built {
                spectrum: pairs.eigenvalues.iter().copied().collect(),
                vectors: Vectors::Pairs(pairs),
                certified: true,
                k: h.samples(),
                trace_tail: trace_tail(h.trace_history()),
            })
        }
        ReductionKind::Normalized => {
            let map = problem.normalization_map().ok_or_else(|| CliError::Config {
                message: "the normalized kind needs a product prior".to_string(),
            })?;
            let lik = problem.placeholder_likelihood(Space::X)?;
            let h = pullback_h(&map, lik.as_dyn(), reduction.k, &mut rng)?;
            let pairs = generalized_eig(h.matrix(), &metric)?;
            Ok(Built {
                spectrum: pairs.eigenvalues.iter().copied().collect(),
                vectors: Vectors::Pairs(pairs),
                certified: true,
                k: h.samples(),
                trace_tail: trace_tail(h.trace_history()),
            })
        }
        ReductionKind::Coordinate => {
            let lik = problem.placeholder_likelihood(Space::X)?;
            let h = data_free_h(problem.prior_dyn(), lik.as_dyn(), reduction.k, &mut rng)?;
            let scores = coordinate_scores(h.matrix(), &metric)?;
            let order = top_indices(&scores, scores.len())?;
            let spectrum: Vec<f64> = order.iter().map(|&i| scores[i]).collect();
            Ok(Built {
                spectrum,
                vectors: Vectors::Coordinates(order),
                certified: false,
                k: h.samples(),
                trace_tail: trace_tail(h.trace_history()),
            })
        }
        ReductionKind::PriorBased => {
            let prior = problem.gaussian_prior().ok_or_else(|| CliError::Config {
                message: "the prior_based kind needs a Gaussian prior".to_string(),
            })?;
            let eig = prior.cov().matrix().clone().symmetric_eigen();
            let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let spectrum: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            // Γ-orthonormalize the prior eigenvectors: with Σ u = μ u and
            // Γ = Σ⁻¹, the column √μ·u satisfies vᵀΓv = 1.
            let d = prior.dim();
            let basis = nalgebra::DMatrix::from_fn(d, spectrum.len(), |i, j| {
                eig.eigenvectors[(i, order[j])] * spectrum[j].sqrt()
            });
            let pairs = lis_core::linalg::GeneralizedEigenPairs {
                eigenvalues: DVector::from_vec(spectrum.clone()),
                eigenvectors: basis,
            };
            Ok(Built {
                spectrum,
                vectors: Vectors::Pairs(pairs),
                certified: false,
                k: 0,
                trace_tail: Vec::new(),
            })
        }
        ReductionKind::DataDependent => {
            let data_dir = args.data.as_ref().expect("checked by caller");
            let (y, sidecar) = artifacts::load_data(data_dir)?;
            let fingerprint = config.problem_fingerprint();
            if sidecar.problem_fingerprint != fingerprint {
                return Err(CliError::HashMismatch {
                    what: "data problem fingerprint",
                    expected: fingerprint,
                    found: sidecar.problem_fingerprint,
                });
            }
            let lik = problem.likelihood(y, Space::X)?;
            let chain_path = args.chain.as_ref().expect("checked by caller");
            let (header, chain) = artifacts::load_chain(chain_path)?;
            if header.dim != problem.dim() {
                return Err(CliError::IncompatibleRuns {
                    message: format!(
                        "posterior chain has dimension {}, the problem has {}",
                        header.dim,
                        problem.dim()
                    ),
                });
            }
            let states: Vec<DVector<f64>> = chain
                .states()
                .iter()
                .skip(reduction.burn_in)
                .step_by(reduction.thin)
                .cloned()
                .collect();
            if states.is_empty() {
                return Err(CliError::MissingInput {
                    message: format!(
                        "burn-in {} and thinning {} leave no chain states",
                        reduction.burn_in, reduction.thin
                    ),
                });
            }
            let h = data_dependent_h(&states, lik.as_dyn())?;
            let pairs = generalized_eig(h.matrix(), &metric)?;
            Ok(Built {
                spectrum: pairs.eigenvalues.iter().copied().collect(),
                vectors: Vectors::Pairs(pairs),
                certified: true,
                k: h.samples(),
                trace_tail: trace_tail(h.trace_history()),
            })
        }
    }
}

/// Rank from the reduction spec: explicit `rank` wins, otherwise the
/// smallest rank whose `(κ/2)`-weighted spectrum tail is at most `epsilon`
/// (capped at `max_rank`); `epsilon = inf` selects the minimum rank 1.
fn resolve_rank(spectrum: &[f64], reduction: &ReductionSpec) -> Result<usize> {
    let d = spectrum.len();
    if let Some(r) = reduction.rank {
        if r > d {
            return config_err(format!("reduction.rank {r} exceeds the dimension {d}"));
        }
        return Ok(r);
    }
    if let Some(eps) = reduction.epsilon {
        if eps.0.is_infinite() {
            return Ok(1);
        }
        let r_max = reduction.max_rank.unwrap_or(d);
        return Ok(select_rank(spectrum, reduction.kappa, eps.0, r_max)?);
    }
    config_err("the reduction needs either an explicit rank or an epsilon target")
}

fn trace_tail(history: &[f64]) -> Vec<f64> {
    const TAIL: usize = 20;
    history[history.len().saturating_sub(TAIL)..].to_vec()
}
