//! Simulator for a 2-D wireless sensor field observing a spatially correlated
//! Gaussian phenomenon.
//!
//! The pipeline is: build a [`deployment::Deployment`] (grid of cluster heads,
//! randomly scattered normal nodes, one tracing point per head), partition the
//! normal nodes by nearest head ([`clustering`]), then score each cluster's
//! ability to reconstruct its tracing point with the normalized data accuracy
//! `D_A = 1 - D / sigma_s^2` ([`accuracy`]), either in closed form or by
//! Monte-Carlo simulation. [`experiments`] wires these together into the
//! reproducible sweeps exposed by the `wsn-sim` CLI.

pub mod accuracy;
pub mod clustering;
pub mod deployment;
mod error;
pub mod experiments;
pub mod rng;
pub mod spatial_stats;

pub use error::{Error, Result};

/// Version tag echoed into every emitted report.
pub const VERSION: &str = concat!("wsn-core ", env!("CARGO_PKG_VERSION"));
