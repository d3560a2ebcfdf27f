//! Coordinate-wise recovery procedures.
//!
//! All four procedures share one contract: given a [`ProblemInstance`] and a
//! [`DistributionPair`], decide per component whether it belongs to the
//! support set and account for every sample taken. Components are processed
//! independently, each drawing from its own `(component, step)` substream,
//! so outcomes are invariant to processing order and to index relabeling
//! (with correspondingly re-keyed streams).
//!
//! * [`run_fixed_sample`] — the non-sequential baseline: a fixed `m` samples
//!   per component, then either an LLR threshold or top-`s` selection.
//! * [`run_sprt`] — one sequential probability ratio test per component,
//!   with thresholds that scale in `s` and `n - s`; a truncation cap
//!   replaces nontermination.
//! * [`run_simple_st`] — multi-pass halving for the Gaussian pair: each pass
//!   takes `m/2` fresh samples per survivor and keeps components whose pass
//!   sum is positive.
//! * [`run_general_st`] — the general thresholding procedure: a growing
//!   per-step sample schedule and null-quantile thresholds that discard an
//!   expected `rho` fraction of surviving null components per step.

use std::collections::BTreeSet;

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bounds::{self, ceil_log};
use crate::distributions::{DistributionError, DistributionPair, FamilyKind, Hypothesis};
use crate::rng::StreamSource;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProcedureError {
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error("procedure does not support this distribution family: {0}")]
    UnsupportedFamily(String),
    #[error("sampling schedule underflows: step 1 would take {m1} samples (budget m = {m})")]
    ScheduleUnderflow { m1: u64, m: u64 },
    #[error("outcome does not match instance: {0}")]
    MismatchedInstance(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

/// One recovery problem: dimension, sparsity, the true support, and the seed
/// that roots every stream of the trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemInstance {
    n: usize,
    s: usize,
    support: BTreeSet<usize>,
    pub seed: u64,
}

impl ProblemInstance {
    pub fn new(n: usize, support: BTreeSet<usize>, seed: u64) -> Result<Self, ProcedureError> {
        let s = support.len();
        if s == 0 {
            return Err(ProcedureError::InvalidInstance(
                "support must be nonempty".into(),
            ));
        }
        if 2 * s > n {
            return Err(ProcedureError::InvalidInstance(format!(
                "sparsity must satisfy s <= n/2, got s = {s}, n = {n}"
            )));
        }
        if let Some(&max) = support.iter().next_back() {
            if max >= n {
                return Err(ProcedureError::InvalidInstance(format!(
                    "support index {max} out of range for n = {n}"
                )));
            }
        }
        Ok(Self { n, s, support, seed })
    }

    /// Support occupying the first `s` indices; handy for debugging.
    pub fn first_s(n: usize, s: usize, seed: u64) -> Result<Self, ProcedureError> {
        Self::new(n, (0..s).collect(), seed)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn support(&self) -> &BTreeSet<usize> {
        &self.support
    }

    pub fn hypothesis_of(&self, component: usize) -> Hypothesis {
        if self.support.contains(&component) {
            Hypothesis::Alt
        } else {
            Hypothesis::Null
        }
    }
}

/// The result of one procedure run: the estimated support plus full sample
/// accounting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryOutcome {
    pub estimated_support: BTreeSet<usize>,
    /// Realized samples per component, indexed by component.
    pub samples_per_index: Vec<u64>,
    pub total_samples: u64,
    pub exact: bool,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// Whether any component hit the SPRT truncation cap.
    pub truncated: bool,
}

impl RecoveryOutcome {
    fn new(
        instance: &ProblemInstance,
        estimated_support: BTreeSet<usize>,
        samples_per_index: Vec<u64>,
        truncated: bool,
    ) -> Self {
        debug_assert_eq!(samples_per_index.len(), instance.n);
        let false_positives = estimated_support.difference(&instance.support).count();
        let false_negatives = instance.support.difference(&estimated_support).count();
        RecoveryOutcome {
            total_samples: samples_per_index.iter().sum(),
            exact: false_positives == 0 && false_negatives == 0,
            estimated_support,
            samples_per_index,
            false_positives,
            false_negatives,
            truncated,
        }
    }
}

/// Per-component error counts for an outcome: components wrongly included
/// (alpha events), components wrongly excluded (beta events), and exactness.
pub fn classify_outcome(
    outcome: &RecoveryOutcome,
    instance: &ProblemInstance,
) -> Result<(usize, usize, bool), ProcedureError> {
    if outcome.samples_per_index.len() != instance.n {
        return Err(ProcedureError::MismatchedInstance(format!(
            "outcome covers {} components, instance has {}",
            outcome.samples_per_index.len(),
            instance.n
        )));
    }
    if let Some(&max) = outcome.estimated_support.iter().next_back() {
        if max >= instance.n {
            return Err(ProcedureError::MismatchedInstance(format!(
                "estimated index {max} out of range for n = {}",
                instance.n
            )));
        }
    }
    let alpha = outcome
        .estimated_support
        .difference(&instance.support)
        .count();
    let beta = instance
        .support
        .difference(&outcome.estimated_support)
        .count();
    Ok((alpha, beta, alpha == 0 && beta == 0))
}

/// Decision rule for the fixed-sample baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecisionRule {
    /// Include components whose m-sample LLR strictly exceeds `tau`.
    LlrThreshold(f64),
    /// Include the `s` components with the largest statistic, ties broken by
    /// lowest index. Ranking by the monotone statistic equals ranking by the
    /// LLR for every supported family, so no knowledge of P1 is needed.
    TopS,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedSampleConfig {
    pub m: u64,
    pub rule: DecisionRule,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprtConfig {
    /// Threshold exponent margin; any value > 0.
    pub epsilon: f64,
    /// Hard cap on the per-component stopping time.
    pub j_max: u64,
}

impl SprtConfig {
    /// Default truncation cap: `10^4 * max(1, ceil(ln s / d01))`, far beyond
    /// the expected stopping time whenever the null drift is nonzero.
    pub fn default_j_max(s: usize, d01: f64) -> u64 {
        let per_test = if d01 > 0.0 {
            ((s as f64).ln() / d01).ceil().max(1.0)
        } else {
            1.0
        };
        10_000 * per_test as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpleStConfig {
    /// Target family-wise error rate.
    pub delta: f64,
    /// Per-dimension budget; must be even, each pass takes `m/2` samples.
    pub m: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralStConfig {
    pub delta: f64,
    /// Per-dimension budget.
    pub m: u64,
    /// Minimum expected fraction of surviving null components discarded per
    /// step, in [1/2, 1).
    pub rho: f64,
}

/// The four procedures behind one dispatchable configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcedureConfig {
    FixedSample(FixedSampleConfig),
    Sprt(SprtConfig),
    SimpleSt(SimpleStConfig),
    GeneralSt(GeneralStConfig),
}

impl ProcedureConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ProcedureConfig::FixedSample(_) => "fixed_sample",
            ProcedureConfig::Sprt(_) => "sprt",
            ProcedureConfig::SimpleSt(_) => "simple_st",
            ProcedureConfig::GeneralSt(_) => "general_st",
        }
    }

    /// The nominal per-dimension budget, when the procedure has one.
    pub fn nominal_budget(&self) -> Option<u64> {
        match self {
            ProcedureConfig::FixedSample(c) => Some(c.m),
            ProcedureConfig::Sprt(_) => None,
            ProcedureConfig::SimpleSt(c) => Some(c.m),
            ProcedureConfig::GeneralSt(c) => Some(c.m),
        }
    }

    pub fn validate(&self) -> Result<(), ProcedureError> {
        match self {
            ProcedureConfig::FixedSample(c) => {
                if c.m == 0 {
                    return Err(ProcedureError::InvalidConfig(
                        "fixed_sample requires m >= 1".into(),
                    ));
                }
            }
            ProcedureConfig::Sprt(c) => {
                if !(c.epsilon > 0.0) {
                    return Err(ProcedureError::InvalidConfig(format!(
                        "sprt requires epsilon > 0, got {}",
                        c.epsilon
                    )));
                }
                if c.j_max == 0 {
                    return Err(ProcedureError::InvalidConfig(
                        "sprt requires j_max >= 1".into(),
                    ));
                }
            }
            ProcedureConfig::SimpleSt(c) => {
                if c.m < 2 || c.m % 2 != 0 {
                    return Err(ProcedureError::InvalidConfig(format!(
                        "simple_st requires an even budget m >= 2, got {}",
                        c.m
                    )));
                }
                if !(c.delta > 0.0 && c.delta < 1.0) {
                    return Err(ProcedureError::InvalidConfig(format!(
                        "simple_st requires delta in (0, 1), got {}",
                        c.delta
                    )));
                }
            }
            ProcedureConfig::GeneralSt(c) => {
                if c.m == 0 {
                    return Err(ProcedureError::InvalidConfig(
                        "general_st requires m >= 1".into(),
                    ));
                }
                if !(c.delta > 0.0 && c.delta < 1.0) {
                    return Err(ProcedureError::InvalidConfig(format!(
                        "general_st requires delta in (0, 1), got {}",
                        c.delta
                    )));
                }
                if !(0.5..1.0).contains(&c.rho) {
                    return Err(ProcedureError::InvalidConfig(format!(
                        "general_st requires rho in [1/2, 1), got {}",
                        c.rho
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Dispatch a configured procedure.
pub fn run_procedure<S: StreamSource>(
    config: &ProcedureConfig,
    instance: &ProblemInstance,
    pair: &DistributionPair,
    streams: &S,
) -> Result<RecoveryOutcome, ProcedureError> {
    match config {
        ProcedureConfig::FixedSample(c) => run_fixed_sample(instance, pair, c, streams),
        ProcedureConfig::Sprt(c) => run_sprt(instance, pair, c, streams),
        ProcedureConfig::SimpleSt(c) => run_simple_st(instance, pair, c, streams),
        ProcedureConfig::GeneralSt(c) => run_general_st(instance, pair, c, streams),
    }
}

/// Non-sequential baseline: exactly `m` samples of every component.
pub fn run_fixed_sample<S: StreamSource>(
    instance: &ProblemInstance,
    pair: &DistributionPair,
    config: &FixedSampleConfig,
    streams: &S,
) -> Result<RecoveryOutcome, ProcedureError> {
    ProcedureConfig::FixedSample(*config).validate()?;
    let n = instance.n;
    let m = config.m;
    let samples_per_index = vec![m; n];
    let estimated = match config.rule {
        DecisionRule::LlrThreshold(tau) => {
            let mut est = BTreeSet::new();
            for i in 0..n {
                let mut rng = streams.component_stream(i as u64, 0);
                let obs = pair.sample(instance.hypothesis_of(i), m as usize, &mut rng);
                if pair.llr(&obs)? > tau {
                    est.insert(i);
                }
            }
            est
        }
        DecisionRule::TopS => {
            let mut scored: Vec<(usize, f64)> = (0..n)
                .map(|i| {
                    let mut rng = streams.component_stream(i as u64, 0);
                    let obs = pair.sample(instance.hypothesis_of(i), m as usize, &mut rng);
                    (i, pair.test_statistic(&obs))
                })
                .collect();
            // descending statistic, ties to the lowest index
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            scored[..instance.s].iter().map(|&(i, _)| i).collect()
        }
    };
    Ok(RecoveryOutcome::new(
        instance,
        estimated,
        samples_per_index,
        false,
    ))
}

/// Outcome of a single-component SPRT walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprtComponent {
    pub accepted_alt: bool,
    /// Stopping time: samples consumed before exit (or the cap).
    pub steps: u64,
    /// Log-likelihood ratio at stopping.
    pub final_llr: f64,
    pub truncated: bool,
}

/// Run one SPRT: sample while `log_gamma_l <= LLR <= log_gamma_u`, decide on
/// the exit side. If the walk is still inside after `j_max` samples it is
/// truncated and decided by comparison with the midpoint of the thresholds.
pub fn sprt_single(
    pair: &DistributionPair,
    hypothesis: Hypothesis,
    log_gamma_l: f64,
    log_gamma_u: f64,
    j_max: u64,
    rng: &mut ChaCha8Rng,
) -> Result<SprtComponent, ProcedureError> {
    if !pair.alt_known() {
        return Err(DistributionError::QueryNotPermitted.into());
    }
    if log_gamma_l > log_gamma_u {
        return Err(ProcedureError::InvalidConfig(format!(
            "SPRT thresholds out of order: {log_gamma_l} > {log_gamma_u}"
        )));
    }
    let mut llr = 0.0;
    for j in 1..=j_max {
        let y = pair.sample_one(hypothesis, rng);
        llr += pair.llr_term(y);
        if llr < log_gamma_l {
            return Ok(SprtComponent {
                accepted_alt: false,
                steps: j,
                final_llr: llr,
                truncated: false,
            });
        }
        if llr > log_gamma_u {
            return Ok(SprtComponent {
                accepted_alt: true,
                steps: j,
                final_llr: llr,
                truncated: false,
            });
        }
    }
    let midpoint = (log_gamma_l + log_gamma_u) / 2.0;
    Ok(SprtComponent {
        accepted_alt: llr > midpoint,
        steps: j_max,
        final_llr: llr,
        truncated: true,
    })
}

/// One SPRT per component with thresholds `gamma_l = s^-(1+eps)`,
/// `gamma_u = (n-s)^(1+eps)`, comparisons in the log domain.
pub fn run_sprt<S: StreamSource>(
    instance: &ProblemInstance,
    pair: &DistributionPair,
    config: &SprtConfig,
    streams: &S,
) -> Result<RecoveryOutcome, ProcedureError> {
    run_sprt_with_trace(instance, pair, config, streams).map(|(outcome, _)| outcome)
}

/// [`run_sprt`] plus per-component traces for diagnostics (stopping times,
/// final LLR values, truncation flags).
pub fn run_sprt_with_trace<S: StreamSource>(
    instance: &ProblemInstance,
    pair: &DistributionPair,
    config: &SprtConfig,
    streams: &S,
) -> Result<(RecoveryOutcome, Vec<SprtComponent>), ProcedureError> {
    ProcedureConfig::Sprt(*config).validate()?;
    if !pair.alt_known() {
        return Err(DistributionError::QueryNotPermitted.into());
    }
    let n = instance.n;
    let thresholds = bounds::sprt_thresholds(n as f64, instance.s as f64, config.epsilon)
        .map_err(|e| ProcedureError::InvalidConfig(e.to_string()))?;
    let mut estimated = BTreeSet::new();
    let mut samples = vec![0u64; n];
    let mut traces = Vec::with_capacity(n);
    let mut truncated = false;
    for i in 0..n {
        let mut rng = streams.component_stream(i as u64, 0);
        let result = sprt_single(
            pair,
            instance.hypothesis_of(i),
            thresholds.log_gamma_l,
            thresholds.log_gamma_u,
            config.j_max,
            &mut rng,
        )?;
        samples[i] = result.steps;
        truncated |= result.truncated;
        if result.accepted_alt {
            estimated.insert(i);
        }
        traces.push(result);
    }
    Ok((
        RecoveryOutcome::new(instance, estimated, samples, truncated),
        traces,
    ))
}

/// Number of halving passes for simple sequential thresholding:
/// `ceil(log2(2n / delta))`.
pub fn simple_st_passes(n: usize, delta: f64) -> u64 {
    ceil_log(2.0, 2.0 * n as f64 / delta)
}

/// Simple sequential thresholding for the Gaussian mean-shift pair: each of
/// `K` passes takes `m/2` fresh samples of every surviving component and
/// keeps those whose pass sum is strictly positive.
pub fn run_simple_st<S: StreamSource>(
    instance: &ProblemInstance,
    pair: &DistributionPair,
    config: &SimpleStConfig,
    streams: &S,
) -> Result<RecoveryOutcome, ProcedureError> {
    ProcedureConfig::SimpleSt(*config).validate()?;
    if pair.kind() != FamilyKind::GaussianShift {
        return Err(ProcedureError::UnsupportedFamily(format!(
            "simple_st is defined for the Gaussian mean-shift pair, got {}; \
             use general_st with rho = 1/2 for other families",
            pair.kind().as_str()
        )));
    }
    let n = instance.n;
    let passes = simple_st_passes(n, config.delta);
    let per_pass = config.m / 2;
    let mut samples = vec![0u64; n];
    let mut alive: Vec<usize> = (0..n).collect();
    for pass in 1..=passes {
        let mut next = Vec::with_capacity(alive.len());
        for &i in &alive {
            let mut rng = streams.component_stream(i as u64, pass);
            let obs = pair.sample(instance.hypothesis_of(i), per_pass as usize, &mut rng);
            samples[i] += per_pass;
            if pair.test_statistic(&obs) > 0.0 {
                next.push(i);
            }
        }
        alive = next;
        if alive.is_empty() {
            break;
        }
    }
    let estimated: BTreeSet<usize> = alive.into_iter().collect();
    Ok(RecoveryOutcome::new(instance, estimated, samples, false))
}

/// The per-step sampling schedule of general sequential thresholding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StSchedule {
    /// Number of steps `K`.
    pub steps: u64,
    /// `m_k` for `k = 1..=K`: `floor(m k rho^2 n / (n + s K^2))`.
    pub samples_per_step: Vec<u64>,
}

impl StSchedule {
    /// Total samples a component surviving every step would consume.
    pub fn full_cost(&self) -> u64 {
        self.samples_per_step.iter().sum()
    }
}

/// Evaluate the schedule for an instance, rejecting configurations whose
/// first step would take no samples.
pub fn general_st_schedule(
    n: usize,
    s: usize,
    config: &GeneralStConfig,
) -> Result<StSchedule, ProcedureError> {
    ProcedureConfig::GeneralSt(*config).validate()?;
    let steps = ceil_log(
        1.0 / (1.0 - config.rho),
        2.0 * (n - s) as f64 / config.delta,
    );
    let denom = n as f64 + s as f64 * (steps as f64) * (steps as f64);
    let samples_per_step: Vec<u64> = (1..=steps)
        .map(|k| {
            (config.m as f64 * k as f64 * config.rho * config.rho * n as f64 / denom).floor()
                as u64
        })
        .collect();
    let m1 = samples_per_step.first().copied().unwrap_or(0);
    if m1 < 1 {
        return Err(ProcedureError::ScheduleUnderflow { m1, m: config.m });
    }
    Ok(StSchedule {
        steps,
        samples_per_step,
    })
}

/// General sequential thresholding: on step `k` every surviving component is
/// sampled `m_k` fresh times and kept iff its statistic strictly exceeds the
/// null `rho`-quantile for that step's sample count. Runs without knowledge
/// of the alternative's parameter.
pub fn run_general_st<S: StreamSource>(
    instance: &ProblemInstance,
    pair: &DistributionPair,
    config: &GeneralStConfig,
    streams: &S,
) -> Result<RecoveryOutcome, ProcedureError> {
    let schedule = general_st_schedule(instance.n, instance.s, config)?;
    let n = instance.n;
    let mut samples = vec![0u64; n];
    let mut alive: Vec<usize> = (0..n).collect();
    for (idx, &m_k) in schedule.samples_per_step.iter().enumerate() {
        let step = idx as u64 + 1;
        let gamma_k = pair.null_quantile(m_k, config.rho)?;
        let mut next = Vec::with_capacity(alive.len());
        for &i in &alive {
            let mut rng = streams.component_stream(i as u64, step);
            let obs = pair.sample(instance.hypothesis_of(i), m_k as usize, &mut rng);
            samples[i] += m_k;
            if pair.test_statistic(&obs) > gamma_k {
                next.push(i);
            }
        }
        alive = next;
        if alive.is_empty() {
            break;
        }
    }
    let estimated: BTreeSet<usize> = alive.into_iter().collect();
    Ok(RecoveryOutcome::new(instance, estimated, samples, false))
}
