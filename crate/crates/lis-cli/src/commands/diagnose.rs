//! `lis diagnose`: mixing diagnostics for stored chain files — integrated
//! autocorrelation times, effective sample sizes, acceptance rates — plus an
//! optional plain-CSV export of the states themselves.

use super::report_done;
use crate::artifacts::{self, fmt_f64};
use crate::error::Result;
use clap::Args;
use lis_core::diagnostics::ChainSummary;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Output directory for summary.json and the per-chain CSV files.
    #[arg(long)]
    pub output: PathBuf,
    /// Also export every chain as a states_<name>.csv table.
    #[arg(long)]
    pub export_csv: bool,
    /// Chain files to analyze.
    #[arg(required = true)]
    pub chains: Vec<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ChainDiagnostics {
    file: String,
    dim: usize,
    steps: usize,
    kernel: String,
    seed: u64,
    n: Option<usize>,
    rank: Option<usize>,
    acceptance_rate: f64,
    /// Mean integrated autocorrelation time across components.
    tau: f64,
    /// Effective sample size `steps / tau`.
    ess: f64,
    /// Components whose series was constant over the whole chain.
    degenerate_components: usize,
}

#[derive(Debug, Serialize)]
struct DiagnoseSummary {
    chains: Vec<ChainDiagnostics>,
}

pub fn run_diagnose(args: &DiagnoseArgs) -> Result<()> {
    artifacts::ensure_dir(&args.output)?;
    let mut report = DiagnoseSummary {
        chains: Vec::with_capacity(args.chains.len()),
    };
    for path in &args.chains {
        let (header, chain) = artifacts::load_chain(path)?;
        let summary = ChainSummary::from_chain(&chain)?;
        let stem = artifacts::file_stem(path);

        let iact_rows: Vec<String> = summary
            .component_iact()
            .iter()
            .enumerate()
            .map(|(i, est)| {
                format!(
                    "{},{},{},{}",
                    i + 1,
                    fmt_f64(est.tau),
                    est.window,
                    est.degenerate
                )
            })
            .collect();
        artifacts::write_csv(
            &args.output.join(format!("iact_{stem}.csv")),
            "component,tau,window,degenerate",
            &iact_rows,
        )?;

        if args.export_csv {
            export_states(&args.output.join(format!("states_{stem}.csv")), &chain)?;
        }

        report.chains.push(ChainDiagnostics {
            file: artifacts::path_string(path),
            dim: header.dim,
            steps: header.k,
            kernel: header.kernel,
            seed: header.seed,
            n: header.n,
            rank: header.rank,
            acceptance_rate: summary.acceptance_rate(),
            tau: summary.tau(),
            ess: summary.ess(),
            degenerate_components: summary
                .component_iact()
                .iter()
                .filter(|e| e.degenerate)
                .count(),
        });
    }
    artifacts::write_json(&args.output.join("summary.json"), &report)?;
    report_done(
        &format!("diagnostics for {} chain(s)", args.chains.len()),
        &args.output,
    );
    Ok(())
}

/// Full-precision CSV of the chain: one row per step with every state
/// component, the recorded log-target, and the acceptance flag.
fn export_states(path: &PathBuf, chain: &lis_core::samplers::ChainRecord) -> Result<()> {
    let mut header = String::from("step");
    for i in 1..=chain.dim() {
        header.push_str(&format!(",x{i}"));
    }
    header.push_str(",log_target,accepted");
    let rows: Vec<String> = (0..chain.len())
        .map(|j| {
            let mut row = format!("{}", j + 1);
            for v in chain.state(j).iter() {
                row.push(',');
                row.push_str(&fmt_f64(*v));
            }
            row.push(',');
            row.push_str(&fmt_f64(chain.log_targets()[j]));
            row.push(',');
            row.push_str(if chain.accepted()[j] { "1" } else { "0" });
            row
        })
        .collect();
    artifacts::write_csv(path, &header, &rows)
}
