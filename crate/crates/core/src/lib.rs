//! Deterministic single-process simulator for federated learning over
//! heterogeneous clients.
//!
//! The crate is layered bottom-up:
//!
//! - [`numerics`]: dense matrices, a small MLP classifier and minibatch SGD.
//! - [`data`]: per-client datasets, synthetic domain-shifted federations,
//!   feature-file ingestion and stratified train/test splitting.
//! - [`protocol`]: client state, local update, weighted aggregation, the
//!   Fed-Star weightage matrix and pre-aggregation, and the communication ledger.
//! - [`algorithms`]: FedAvg, RingFed, Fed-Cyclic and Fed-Star orchestrators plus
//!   local-only and centralized baselines.
//! - [`metrics`]: confusion matrices, accuracy and F1 reports.
//!
//! Every stochastic operation is a pure function of its inputs and a seed; a
//! run with the same configuration reproduces the same bits.

pub mod algorithms;
pub mod data;
pub mod error;
pub mod metrics;
pub mod numerics;
pub mod protocol;
pub mod rng;

pub use error::{Error, Result};
