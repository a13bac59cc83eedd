//! `lis simulate-data`: draw a truth from the prior, simulate observations,
//! and persist the data record with its provenance sidecar.

use super::{report_done, resolve_output};
use crate::artifacts;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::problem::ProblemInstance;
use clap::Args;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct SimulateDataArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (defaults to the config's output_dir).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Generator seed for the truth draw and the observation noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run_simulate_data(args: &SimulateDataArgs) -> Result<()> {
    let config = ExperimentConfig::load(&args.config)?;
    let out = resolve_output(&args.output, &config)?;
    artifacts::ensure_dir(&out)?;

    let problem = ProblemInstance::build(&config.problem)?;
    let truth = problem.make_truth_and_data(args.seed)?;
    let field = problem.field_of(&truth.x_true);
    artifacts::save_data(
        &out,
        &truth.y,
        &truth.x_true,
        &field,
        &config.problem_fingerprint(),
        args.seed,
        truth.noise_sigma,
    )?;
    report_done(
        &format!("simulated {} observations (seed {})", truth.y.len(), args.seed),
        &out,
    );
    Ok(())
}
