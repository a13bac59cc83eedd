//! Independent numerical oracles for the test suites.
//!
//! Everything here is deliberately written from scratch against textbook
//! definitions (quadrature rules, empirical statistics, finite differences,
//! conjugate-Gaussian formulas) and never calls into the main crates, so that
//! a test comparing implementation output against an oracle value is a real
//! two-route check.

pub mod conjugate;
pub mod fd;
pub mod quad;
pub mod stats;
