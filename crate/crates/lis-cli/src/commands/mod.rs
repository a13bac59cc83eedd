//! Subcommand implementations. Each takes a clap `Args` struct so the same
//! entry points serve the binary and in-process tests.

mod build_subspace;
mod compare;
mod diagnose;
mod sample;
mod simulate_data;

pub use build_subspace::{run_build_subspace, BuildSubspaceArgs};
pub use compare::{run_compare, CompareArgs, CompareCommand, ReductionsArgs, SamplersArgs};
pub use diagnose::{run_diagnose, DiagnoseArgs};
pub use sample::{run_sample, SampleArgs};
pub use simulate_data::{run_simulate_data, SimulateDataArgs};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use std::path::{Path, PathBuf};

/// `--output` wins; otherwise the config's `output_dir`.
fn resolve_output(flag: &Option<PathBuf>, config: &ExperimentConfig) -> Result<PathBuf> {
    flag.clone()
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| CliError::MissingInput {
            message: "no output directory: pass --output or set output_dir in the config"
                .to_string(),
        })
}

/// One human-readable success line on stdout; files carry the real results.
fn report_done(what: &str, dir: &Path) {
    println!("{what} -> {}", dir.display());
}
