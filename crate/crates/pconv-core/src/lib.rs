//! Core library for classifying congruence classes of natural numbers with a
//! small convolutional network over the prime grid.
//!
//! Numbers are encoded by their truncated prime signatures (the exponent
//! vector of the factorization over the first `N` primes), stacked into a
//! `B x N` context matrix of consecutive numbers, and fed to a dense CNN
//! trained with Adam on cross-entropy. Alongside the empirical pipeline,
//! [`predictor`] implements the arithmetic model that decides, from `(m, B)`
//! alone, whether the task is solvable and which classes get confused, and
//! [`patterns`] classifies the error structure of measured confusion
//! matrices so the two can be compared.
//!
//! - [`primes`] — sieve, truncated factorization, smoothness, labels
//! - [`dataset`] — smooth anchor sets, context matrices, batch plans, cache codec
//! - [`net`] — tensors, conv/pool/activation/loss ops, backprop, Adam
//! - [`trainer`] — the batch-sequential training loop and evaluation
//! - [`patterns`] — confusion-matrix structure analysis and partition matching
//! - [`predictor`] — solvability rule, confusability partitions, theorem check
//!
//! The crate is `no_std` (with `alloc`); all file IO, CLI, and report
//! formatting live in the companion `pconv` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dataset;
pub mod net;
pub mod partition;
pub mod patterns;
pub mod predictor;
pub mod primes;
pub mod rng;
pub mod trainer;

pub use dataset::{BatchPlan, ContextMatrix, Dataset};
pub use net::{ArchConfig, ModelState, Tensor};
pub use partition::Partition;
pub use patterns::{ConfusionMatrix, PatternReport, Verdict};
pub use predictor::PredictionReport;
pub use primes::{GridVector, PrimeBasis};
pub use trainer::{TrainConfig, TrainReport};
