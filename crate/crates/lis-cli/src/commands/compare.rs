//! `lis compare`: cross-run tables.
//!
//! `compare samplers` aggregates sampling-efficiency numbers (integrated
//! autocorrelation time, pseudo-marginal estimator spread, second-stage
//! acceptance) over the seeds of several run directories. `compare
//! reductions` evaluates several stored projectors against one reference
//! chain, reporting the estimated KL divergence and, where one exists, the
//! certified bound.

use super::report_done;
use crate::artifacts::{
    self, fmt_f64, ProjectorSidecar, RunManifest, MANIFEST_JSON, REPORT_JSON,
};
use crate::config::{ExperimentConfig, ReductionKind};
use crate::error::{CliError, Result};
use crate::problem::{ProblemInstance, Space};
use crate::STREAM_FROZEN;
use clap::{Args, Subcommand};
use lis_core::diagnostics::{kl_estimate_from_logs, ChainSummary};
use lis_core::reduced::ReducedLikelihood;
use lis_core::rng::derived;
use lis_core::subspace::kl_bound;
use nalgebra::DVector;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(subcommand)]
    pub cmd: CompareCommand,
}

#[derive(Debug, Subcommand)]
pub enum CompareCommand {
    /// Sampler-efficiency table over several run directories.
    Samplers(SamplersArgs),
    /// KL table for several projectors against one reference chain.
    Reductions(ReductionsArgs),
}

pub fn run_compare(args: &CompareArgs) -> Result<()> {
    match &args.cmd {
        CompareCommand::Samplers(a) => samplers(a),
        CompareCommand::Reductions(a) => reductions(a),
    }
}

// ---------------------------------------------------------------------------
// compare samplers
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct SamplersArgs {
    /// Output directory for sampler_table.csv.
    #[arg(long)]
    pub output: PathBuf,
    /// Run directories (each with a manifest.json from `sample`).
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
}

/// Per-seed observations pooled under one (method, rank, N) key.
struct MethodGroup {
    method: String,
    rank: Option<usize>,
    n: Option<usize>,
    tau: Vec<f64>,
    sd_logl: Vec<f64>,
    e_beta: Vec<f64>,
}

fn samplers(args: &SamplersArgs) -> Result<()> {
    artifacts::ensure_dir(&args.output)?;
    let mut fingerprint: Option<String> = None;
    let mut groups: Vec<MethodGroup> = Vec::new();

    for dir in &args.runs {
        let manifest: RunManifest = artifacts::read_json(&dir.join(MANIFEST_JSON))?;
        match &fingerprint {
            None => fingerprint = Some(manifest.problem_fingerprint.clone()),
            Some(fp) if *fp != manifest.problem_fingerprint => {
                return Err(CliError::IncompatibleRuns {
                    message: format!(
                        "run directory {} belongs to a different problem than the first one",
                        artifacts::path_string(dir)
                    ),
                });
            }
            Some(_) => {}
        }

        let key = (manifest.method.clone(), manifest.rank, manifest.n);
        let idx = match groups
            .iter()
            .position(|g| (g.method.as_str(), g.rank, g.n) == (key.0.as_str(), key.1, key.2))
        {
            Some(i) => i,
            None => {
                groups.push(MethodGroup {
                    method: key.0,
                    rank: key.1,
                    n: key.2,
                    tau: Vec::new(),
                    sd_logl: Vec::new(),
                    e_beta: Vec::new(),
                });
                groups.len() - 1
            }
        };

        for entry in &manifest.runs {
            let (_, chain) = artifacts::load_chain(&dir.join(&entry.chain_file))?;
            let summary = ChainSummary::from_chain(&chain)?;
            groups[idx].tau.push(summary.tau());
            if let Some(sd) = entry.pm_log_likelihood_sd {
                groups[idx].sd_logl.push(sd);
            }
            if let Some(beta) = entry.stage2_mean_beta {
                if beta.is_finite() {
                    groups[idx].e_beta.push(beta);
                }
            }
        }
    }

    let rows: Vec<String> = groups
        .iter()
        .map(|g| {
            let (tau_m, tau_s) = mean_sd(&g.tau);
            let (sdl_m, sdl_s) = mean_sd(&g.sd_logl);
            let (eb_m, eb_s) = mean_sd(&g.e_beta);
            format!(
                "{},{},{},{},{},{},{},{},{},{}",
                g.method,
                opt_usize(g.rank),
                opt_usize(g.n),
                g.tau.len(),
                opt_f64(tau_m),
                opt_f64(tau_s),
                opt_f64(sdl_m),
                opt_f64(sdl_s),
                opt_f64(eb_m),
                opt_f64(eb_s)
            )
        })
        .collect();
    artifacts::write_csv(
        &args.output.join("sampler_table.csv"),
        "method,rank,n,seeds,tau_mean,tau_sd,sd_logl_mean,sd_logl_sd,e_beta_mean,e_beta_sd",
        &rows,
    )?;
    report_done(
        &format!("sampler table over {} run(s)", args.runs.len()),
        &args.output,
    );
    Ok(())
}

fn mean_sd(vals: &[f64]) -> (Option<f64>, Option<f64>) {
    if vals.is_empty() {
        return (None, None);
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (Some(mean), None);
    }
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn opt_usize(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

// ---------------------------------------------------------------------------
// compare reductions
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct ReductionsArgs {
    /// Experiment configuration (JSON) for the underlying problem.
    #[arg(long)]
    pub config: PathBuf,
    /// Data directory from `simulate-data`.
    #[arg(long)]
    pub data: PathBuf,
    /// Reference chain of full-space posterior samples.
    #[arg(long)]
    pub chain: PathBuf,
    /// Output directory for kl_table.csv.
    #[arg(long)]
    pub output: PathBuf,
    /// Complement-set size for the reduced-likelihood evaluations.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// States dropped from the head of the reference chain.
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    /// Thinning stride applied to the reference chain.
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    /// Projector directories from `build-subspace`.
    #[arg(required = true)]
    pub projectors: Vec<PathBuf>,
}

/// Kinds whose spectrum tail yields a certified KL bound.
fn certified(kind: &str) -> bool {
    matches!(kind, "data_free" | "data_dependent" | "normalized")
}

fn reductions(args: &ReductionsArgs) -> Result<()> {
    artifacts::ensure_dir(&args.output)?;
    let config = ExperimentConfig::load(&args.config)?;
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

    let (chain_header, chain) = artifacts::load_chain(&args.chain)?;
    if chain_header.dim != dim {
        return Err(CliError::IncompatibleRuns {
            message: format!(
                "the reference chain has dimension {} but the problem has {dim}; \
                 use a full-space (lifted, recycled, or exact) chain",
                chain_header.dim
            ),
        });
    }
    let states: Vec<DVector<f64>> = chain
        .states()
        .iter()
        .skip(args.burn_in)
        .step_by(args.thin.max(1))
        .cloned()
        .collect();
    if states.is_empty() {
        return Err(CliError::MissingInput {
            message: format!(
                "burn-in {} and thinning {} leave no reference states",
                args.burn_in, args.thin
            ),
        });
    }

    // Load every projector first so the common space can be fixed before any
    // likelihood evaluation.
    struct Loaded {
        projector: lis_core::linalg::RankRProjector,
        sidecar: ProjectorSidecar,
        kind: String,
    }
    let mut loaded = Vec::with_capacity(args.projectors.len());
    let mut space: Option<Space> = None;
    for dir in &args.projectors {
        let (projector, sidecar) = artifacts::load_projector(dir)?;
        let report: artifacts::SubspaceReport = artifacts::read_json(&dir.join(REPORT_JSON))?;
        let this_space = if report.kind == ReductionKind::Normalized.as_str() {
            Space::Z
        } else {
            Space::X
        };
        match space {
            None => space = Some(this_space),
            Some(s) if s != this_space => {
                return Err(CliError::IncompatibleRuns {
                    message: "projectors mix native-variable and normalized-variable \
                              constructions; their approximations live in different \
                              coordinates and cannot share one reference chain"
                        .to_string(),
                });
            }
            Some(_) => {}
        }
        let expected = problem.metric_hash(&fingerprint, this_space);
        if sidecar.metric_hash != expected {
            return Err(CliError::HashMismatch {
                what: "projector metric hash",
                expected,
                found: sidecar.metric_hash,
            });
        }
        loaded.push(Loaded {
            projector,
            sidecar,
            kind: report.kind,
        });
    }
    let space = space.expect("at least one projector is required");

    let lik = problem.likelihood(y, space)?;
    let eff_prior = problem.effective_prior(space);
    let prior = eff_prior.as_dyn();
    let full_logs: Vec<f64> = states
        .iter()
        .map(|x| Ok(lik.as_dyn().log_likelihood(x)? + prior.log_density(x)))
        .collect::<Result<_>>()?;

    let red_seed = config.reduction.as_ref().map(|r| r.seed).unwrap_or(0);
    let kappa = config.reduction.as_ref().map(|r| r.kappa).unwrap_or(1.0);

    let mut table: Vec<(String, usize, f64, Option<f64>)> = Vec::new();
    for item in &loaded {
        let mut frozen_rng = derived(red_seed, STREAM_FROZEN);
        let reduced = ReducedLikelihood::frozen(
            &item.projector,
            prior,
            lik.as_dyn(),
            args.n,
            &mut frozen_rng,
        )?;
        let approx_logs: Vec<f64> = states
            .iter()
            .map(|x| Ok(reduced.approx_posterior_log_density(x)?))
            .collect::<Result<_>>()?;
        let kl = kl_estimate_from_logs(&full_logs, &approx_logs)?.value();
        let bound = if certified(&item.kind) {
            Some(kl_bound(
                &item.sidecar.eigenvalues,
                item.projector.rank(),
                kappa,
            )?)
        } else {
            None
        };
        table.push((item.kind.clone(), item.projector.rank(), kl, bound));
    }
    table.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));

    let rows: Vec<String> = table
        .iter()
        .map(|(kind, rank, kl, bound)| {
            format!(
                "{kind},{rank},{},{},{}",
                args.n,
                fmt_f64(*kl),
                bound.map(fmt_f64).unwrap_or_default()
            )
        })
        .collect();
    artifacts::write_csv(
        &args.output.join("kl_table.csv"),
        "kind,rank,n,kl_estimate,kl_bound",
        &rows,
    )?;
    report_done(
        &format!("KL table over {} projector(s)", args.projectors.len()),
        &args.output,
    );
    Ok(())
}
