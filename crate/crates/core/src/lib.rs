//! Sequential procedures for exact sparse support recovery.
//!
//! A small number of components in a high-dimensional vector follow an
//! alternative distribution `P1`; the rest follow a null `P0`. This crate
//! implements coordinate-wise procedures that decide, per component, whether
//! it belongs to the sparse support set, together with the sample-complexity
//! bounds that separate the reliable and unreliable regimes and a Monte Carlo
//! harness for measuring family-wise error rates empirically.
//!
//! Module map:
//!
//! * [`distributions`] — null/alternative pairs: sampling, log-likelihood
//!   ratios, divergences, and null quantiles of the monotone test statistic.
//! * [`procedures`] — the recovery procedures: fixed-sample baselines,
//!   parallel SPRTs, and the two sequential thresholding variants.
//! * [`bounds`] — pure evaluators for the necessary/sufficient
//!   samples-per-dimension expressions and schedule constants.
//! * [`harness`] — seeded, parallelizable Monte Carlo experiments with
//!   deterministic aggregation.
//! * [`config`] — the line-oriented experiment configuration format.
//! * [`report`] — CSV and plain-text emission of experiment results.
//! * [`rng`] — deterministic substream derivation used everywhere above.

pub mod bounds;
pub mod config;
pub mod distributions;
pub mod harness;
pub mod procedures;
pub mod report;
pub mod rng;

pub use distributions::{DistributionPair, Hypothesis, LlrStats};
pub use harness::{ExperimentSpec, MonteCarloReport, SupportPlacement};
pub use procedures::{ProblemInstance, ProcedureConfig, RecoveryOutcome};
