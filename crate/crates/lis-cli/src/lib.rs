//! Config-driven experiment runner for likelihood-informed subspace
//! inference: offline projector construction, online sampling, and
//! diagnostics export, with deterministic on-disk artifacts.
//!
//! The binary `lis` exposes five subcommands (`simulate-data`,
//! `build-subspace`, `sample`, `diagnose`, `compare`); this library holds
//! their implementations so integration tests can drive them in-process.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod problem;

pub use error::{CliError, Result};

/// RNG stream tags for seeds owned by the CLI layer (the core samplers use
/// tags 1–3 of the chain seed internally). All offline draws derive from
/// `reduction.seed`:
/// - [`STREAM_OFFLINE_H`]: prior/reference samples for the averaged
///   Fisher/score matrix;
/// - [`STREAM_FROZEN`]: the frozen complement set of the reduced likelihood
///   (shared by every replicate chain, so they all target the same
///   approximation).
pub const STREAM_OFFLINE_H: u64 = 11;
pub const STREAM_FROZEN: u64 = 12;
