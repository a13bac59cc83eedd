//! Command-line entry point. Every failure is reported as a single JSON
//! line `{"error": ..., "kind": ...}` on stderr with a nonzero exit code;
//! usage errors exit with 2, everything else with 1.

use clap::error::ErrorKind;
use clap::Parser;
use lis_cli::commands::{
    run_build_subspace, run_compare, run_diagnose, run_sample, run_simulate_data,
    BuildSubspaceArgs, CompareArgs, DiagnoseArgs, SampleArgs, SimulateDataArgs,
};

#[derive(Debug, Parser)]
#[command(
    name = "lis",
    version,
    about = "Likelihood-informed subspace construction and MCMC for Bayesian inverse problems"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, clap::Subcommand)]
enum Command {
    /// Draw a ground truth from the prior and simulate observations.
    SimulateData(SimulateDataArgs),
    /// Construct a subspace projector offline and report its spectrum.
    BuildSubspace(BuildSubspaceArgs),
    /// Run one MCMC method, writing chain files and a run manifest.
    Sample(SampleArgs),
    /// Mixing diagnostics (autocorrelation times, ESS) for stored chains.
    Diagnose(DiagnoseArgs),
    /// Comparison tables across runs or across projectors.
    Compare(CompareArgs),
}

fn emit_error(message: &str, kind: &str) {
    let payload = serde_json::json!({ "error": message, "kind": kind });
    eprintln!("{payload}");
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                std::process::exit(0);
            }
            emit_error(&e.to_string(), "usage");
            std::process::exit(2);
        }
    };
    let result = match &cli.cmd {
        Command::SimulateData(args) => run_simulate_data(args),
        Command::BuildSubspace(args) => run_build_subspace(args),
        Command::Sample(args) => run_sample(args),
        Command::Diagnose(args) => run_diagnose(args),
        Command::Compare(args) => run_compare(args),
    };
    if let Err(e) = result {
        emit_error(&e.to_string(), e.kind());
        std::process::exit(e.exit_code());
    }
}
