//! Measurement scheduling for logical-qubit readout on the rotated surface code.
//!
//! The crate is organized around the lifecycle of a readout experiment:
//!
//! * [`lattice`] builds the rotated surface-code graph, its stabilizer
//!   supports and the groupable boundary pairs.
//! * [`noise`] holds per-qubit measurement error profiles and the synthetic
//!   transforms used in the sweeps (alpha scaling, std scaling, idle degrade).
//! * [`modalities`] defines the measurement-transfer modalities (D-M, MR-M,
//!   DR-M, MR-PM, DR-PM) as circuit fragments with participant sets and costs.
//! * [`scheduler`] is the local greedy selector plus conflict resolution by
//!   temporal deferral, with an exhaustive oracle for verification.
//! * [`rl`] is the temporally-constrained pointer environment and a REINFORCE
//!   trainer, with a constrained brute-force oracle for small instances.
//! * [`sim`] runs Monte-Carlo memory experiments: Pauli-frame sampling against
//!   a stabilizer-tableau reference, detector reconstruction and union-find
//!   decoding.
//! * [`harness`] orchestrates the experiment grids (sweeps, ECD fits,
//!   scheduler comparisons) behind the CLI.
//!
//! Shot sampling is data-parallel via rayon when the default `parallel`
//! feature is enabled; the sequential path is always available and produces
//! bit-identical results for the same seed.

pub mod error;
pub mod exec;
pub mod harness;
pub mod lattice;
pub mod modalities;
pub mod noise;
pub mod rl;
pub mod scheduler;
pub mod sim;

pub use error::{Error, Result};
