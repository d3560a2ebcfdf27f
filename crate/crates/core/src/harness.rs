//! Monte Carlo engine.
//!
//! An [`ExperimentSpec`] fixes a problem shape, a distribution pair, a
//! procedure, a trial count, and a base seed. Trials are independent: trial
//! `t` derives every one of its streams from `(base_seed, t)`, so they can
//! run on any number of workers and still aggregate to bit-identical
//! reports. Aggregation itself is a sequential fold over trial results in
//! trial order.

use std::collections::BTreeSet;

use rayon::prelude::*;
use thiserror::Error;

use crate::bounds::{self, BoundReport, DivergenceSelect};
use crate::distributions::{DistributionPair, LlrStats};
use crate::procedures::{
    run_procedure, run_sprt_with_trace, ProblemInstance, ProcedureConfig, ProcedureError,
};
use crate::rng::{StreamSource, Substreams, SUPPORT_COMPONENT};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("trial {trial} (seed {seed}) failed: {source}")]
    Trial {
        trial: u64,
        seed: u64,
        source: ProcedureError,
    },
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("procedure/pair mismatch: {0}")]
    IncompatibleSpec(String),
}

/// How the true support is placed in each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SupportPlacement {
    /// `s` indices drawn uniformly without replacement, fresh per trial.
    #[default]
    UniformRandom,
    /// Indices `0..s`; useful for debugging.
    FixedFirstS,
}

impl SupportPlacement {
    pub fn as_str(&self) -> &'static str {
        match self {
            SupportPlacement::UniformRandom => "uniform_random",
            SupportPlacement::FixedFirstS => "fixed_first_s",
        }
    }
}

/// A complete, reproducible experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub n: usize,
    pub s: usize,
    pub pair: DistributionPair,
    pub procedure: ProcedureConfig,
    pub trials: u64,
    pub base_seed: u64,
    pub support_placement: SupportPlacement,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::InvalidSpec("trials must be >= 1".into()));
        }
        if self.s == 0 || 2 * self.s > self.n {
            return Err(HarnessError::InvalidSpec(format!(
                "sparsity must satisfy 1 <= s <= n/2, got s = {}, n = {}",
                self.s, self.n
            )));
        }
        self.procedure
            .validate()
            .map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
        let needs_llr = matches!(self.procedure, ProcedureConfig::Sprt(_))
            || matches!(
                self.procedure,
                ProcedureConfig::FixedSample(crate::procedures::FixedSampleConfig {
                    rule: crate::procedures::DecisionRule::LlrThreshold(_),
                    ..
                })
            );
        if needs_llr && !self.pair.alt_known() {
            return Err(HarnessError::IncompatibleSpec(
                "this procedure forms pointwise likelihood ratios and requires alt_known = true"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Aggregated experiment results.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub trials: u64,
    /// Fraction of trials with inexact recovery.
    pub fwer_hat: f64,
    /// 95% confidence half-width for `fwer_hat` (normal approximation;
    /// Wilson score interval when either outcome count is below 10).
    pub fwer_halfwidth: f64,
    /// False-positive rate pooled over all null components of all trials.
    pub alpha_hat: f64,
    /// False-negative rate pooled over all support components of all trials.
    pub beta_hat: f64,
    /// Mean of total samples per trial, divided by `n`.
    pub avg_samples_per_dim: f64,
    /// Whether the realized sampling cost respects the nominal budget
    /// `n * m` (up to 3 standard errors); vacuously true for procedures
    /// without a nominal budget.
    pub budget_ok: bool,
    /// Fraction of trials in which any component hit the truncation cap.
    pub truncation_rate: f64,
    /// The sequential necessary-rate bound evaluated for this experiment,
    /// with the regime classified against the experiment's budget.
    pub bound_context: BoundReport,
}

/// Wald-identity diagnostic over the support components of an SPRT
/// experiment, restricted to untruncated walks: `E[J] = E[L^(J)] / d10`
/// makes the per-component residual `J - L/d10` mean-zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaldDiagnostic {
    /// Untruncated support-component walks observed.
    pub components: u64,
    pub mean_steps: f64,
    pub mean_final_llr: f64,
    /// Mean of `J - L/d10`.
    pub residual: f64,
    /// Standard error of the residual mean.
    pub residual_se: f64,
}

/// Budget accounting split by the false-negative conditioning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetDiagnostic {
    pub trials: u64,
    /// Trials with zero false negatives.
    pub zero_fn_trials: u64,
    /// Mean total samples over zero-false-negative trials.
    pub conditional_mean_total: f64,
    /// Standard error of that conditional mean.
    pub conditional_se_total: f64,
    /// Mean total samples over all trials.
    pub unconditional_mean_total: f64,
}

/// Report plus diagnostics; produced in the same pass as the report.
#[derive(Debug, Clone)]
pub struct ExperimentDetail {
    pub report: MonteCarloReport,
    pub budget: BudgetDiagnostic,
    /// Present only for SPRT experiments.
    pub wald: Option<WaldDiagnostic>,
}

struct TrialResult {
    exact: bool,
    false_positives: u64,
    false_negatives: u64,
    total_samples: u64,
    truncated: bool,
    // sums over untruncated support-component SPRT walks
    wald_count: u64,
    wald_steps: f64,
    wald_llr: f64,
    wald_resid: f64,
    wald_resid_sq: f64,
}

/// Exact family-wise error rate implied by independent per-component error
/// rates: `1 - (1 - beta)^s (1 - alpha)^(n - s)`.
pub fn fwer_oracle(alpha: f64, beta: f64, n: usize, s: usize) -> f64 {
    debug_assert!((0.0..=1.0).contains(&alpha) && (0.0..=1.0).contains(&beta));
    1.0 - (1.0 - beta).powi(s as i32) * (1.0 - alpha).powi((n - s) as i32)
}

/// 95% confidence half-width for a binomial proportion `successes / n`.
/// Normal approximation, falling back to the Wilson score interval when
/// either outcome count is below 10.
pub fn binomial_halfwidth(successes: u64, n: u64) -> f64 {
    const Z: f64 = 1.959963984540054;
    if n == 0 {
        return f64::NAN;
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    if successes.min(n - successes) < 10 {
        let z2 = Z * Z;
        Z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / (1.0 + z2 / nf)
    } else {
        Z * (p * (1.0 - p) / nf).sqrt()
    }
}

/// Draw the support set for one trial.
pub fn place_support(
    n: usize,
    s: usize,
    placement: SupportPlacement,
    streams: &Substreams,
) -> BTreeSet<usize> {
    match placement {
        SupportPlacement::FixedFirstS => (0..s).collect(),
        SupportPlacement::UniformRandom => {
            let mut rng = streams.component_stream(SUPPORT_COMPONENT, 0);
            rand::seq::index::sample(&mut rng, n, s).into_iter().collect()
        }
    }
}

fn run_trial(spec: &ExperimentSpec, trial: u64) -> Result<TrialResult, HarnessError> {
    let streams = Substreams::for_trial(spec.base_seed, trial);
    let seed = streams.trial_seed();
    let support = place_support(spec.n, spec.s, spec.support_placement, &streams);
    let instance = ProblemInstance::new(spec.n, support, seed).map_err(|e| {
        HarnessError::Trial {
            trial,
            seed,
            source: e,
        }
    })?;
    let fail = |source: ProcedureError| HarnessError::Trial { trial, seed, source };

    let (outcome, wald) = match &spec.procedure {
        ProcedureConfig::Sprt(cfg) => {
            let (outcome, traces) =
                run_sprt_with_trace(&instance, &spec.pair, cfg, &streams).map_err(fail)?;
            let d10 = spec
                .pair
                .llr_stats()
                .map(|s| s.d10)
                .unwrap_or(f64::NAN);
            let mut count = 0u64;
            let mut steps = 0.0;
            let mut llr = 0.0;
            let mut resid = 0.0;
            let mut resid_sq = 0.0;
            if d10 > 0.0 {
                for &i in instance.support() {
                    let t = traces[i];
                    if !t.truncated {
                        let d = t.steps as f64 - t.final_llr / d10;
                        count += 1;
                        steps += t.steps as f64;
                        llr += t.final_llr;
                        resid += d;
                        resid_sq += d * d;
                    }
                }
            }
            (outcome, (count, steps, llr, resid, resid_sq))
        }
        other => {
            let outcome = run_procedure(other, &instance, &spec.pair, &streams).map_err(fail)?;
            (outcome, (0, 0.0, 0.0, 0.0, 0.0))
        }
    };

    Ok(TrialResult {
        exact: outcome.exact,
        false_positives: outcome.false_positives as u64,
        false_negatives: outcome.false_negatives as u64,
        total_samples: outcome.total_samples,
        truncated: outcome.truncated,
        wald_count: wald.0,
        wald_steps: wald.1,
        wald_llr: wald.2,
        wald_resid: wald.3,
        wald_resid_sq: wald.4,
    })
}

/// The budget the regime classification and `budget_ok` compare against:
/// the nominal per-dimension budget when the procedure declares one, the
/// realized average otherwise (SPRT).
pub fn effective_budget(spec: &ExperimentSpec, avg_samples_per_dim: f64) -> f64 {
    spec.procedure
        .nominal_budget()
        .map(|m| m as f64)
        .unwrap_or(avg_samples_per_dim)
}

/// LLR statistics of the spec's pair, with a NaN fallback so experiments on
/// degenerate pairs (infinite divergences) still aggregate and report.
pub fn spec_stats(spec: &ExperimentSpec) -> LlrStats {
    spec.pair
        .llr_stats()
        .unwrap_or(LlrStats::new(f64::NAN, f64::NAN, f64::NAN))
}

/// Run all trials and return the aggregated report.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<MonteCarloReport, HarnessError> {
    run_experiment_detailed(spec).map(|d| d.report)
}

/// Run all trials; also returns budget and (for SPRT) Wald diagnostics
/// gathered in the same pass.
pub fn run_experiment_detailed(spec: &ExperimentSpec) -> Result<ExperimentDetail, HarnessError> {
    spec.validate()?;
    let results: Vec<Result<TrialResult, HarnessError>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| run_trial(spec, t))
        .collect();
    // surface the lowest-numbered failing trial, deterministically
    let mut trials = Vec::with_capacity(results.len());
    for r in results {
        trials.push(r?);
    }
    Ok(aggregate(spec, &trials))
}

fn aggregate(spec: &ExperimentSpec, trials: &[TrialResult]) -> ExperimentDetail {
    let t = trials.len() as u64;
    let tf = t as f64;
    let n = spec.n as f64;

    let errors = trials.iter().filter(|r| !r.exact).count() as u64;
    let fp: u64 = trials.iter().map(|r| r.false_positives).sum();
    let fns: u64 = trials.iter().map(|r| r.false_negatives).sum();
    let truncated = trials.iter().filter(|r| r.truncated).count() as u64;

    let mut sum_total = 0.0;
    let mut sumsq_total = 0.0;
    let mut cond_sum = 0.0;
    let mut cond_sumsq = 0.0;
    let mut cond_count = 0u64;
    for r in trials {
        let x = r.total_samples as f64;
        sum_total += x;
        sumsq_total += x * x;
        if r.false_negatives == 0 {
            cond_sum += x;
            cond_sumsq += x * x;
            cond_count += 1;
        }
    }
    let mean_total = sum_total / tf;
    let var_total = (sumsq_total / tf - mean_total * mean_total).max(0.0);
    let se_total = (var_total / tf).sqrt();
    let avg_samples_per_dim = mean_total / n;

    let budget_ok = match spec.procedure.nominal_budget() {
        Some(m) => mean_total <= n * m as f64 + 3.0 * se_total,
        None => true,
    };

    let stats = spec_stats(spec);
    let m_eff = effective_budget(spec, avg_samples_per_dim);
    let bound_context = bounds::context_report(
        m_eff,
        n,
        spec.s as f64,
        &stats,
        DivergenceSelect::Auto,
    );

    let report = MonteCarloReport {
        trials: t,
        fwer_hat: errors as f64 / tf,
        fwer_halfwidth: binomial_halfwidth(errors, t),
        alpha_hat: fp as f64 / (tf * (spec.n - spec.s) as f64),
        beta_hat: fns as f64 / (tf * spec.s as f64),
        avg_samples_per_dim,
        budget_ok,
        truncation_rate: truncated as f64 / tf,
        bound_context,
    };

    let cond_mean = if cond_count > 0 {
        cond_sum / cond_count as f64
    } else {
        f64::NAN
    };
    let cond_se = if cond_count > 1 {
        let v = (cond_sumsq / cond_count as f64 - cond_mean * cond_mean).max(0.0);
        (v / cond_count as f64).sqrt()
    } else {
        f64::NAN
    };
    let budget = BudgetDiagnostic {
        trials: t,
        zero_fn_trials: cond_count,
        conditional_mean_total: cond_mean,
        conditional_se_total: cond_se,
        unconditional_mean_total: mean_total,
    };

    let wald_count: u64 = trials.iter().map(|r| r.wald_count).sum();
    let wald = if matches!(spec.procedure, ProcedureConfig::Sprt(_)) && wald_count > 0 {
        let cf = wald_count as f64;
        let steps: f64 = trials.iter().map(|r| r.wald_steps).sum::<f64>() / cf;
        let llr: f64 = trials.iter().map(|r| r.wald_llr).sum::<f64>() / cf;
        let resid: f64 = trials.iter().map(|r| r.wald_resid).sum::<f64>() / cf;
        let resid_sq: f64 = trials.iter().map(|r| r.wald_resid_sq).sum::<f64>() / cf;
        let var = (resid_sq - resid * resid).max(0.0);
        Some(WaldDiagnostic {
            components: wald_count,
            mean_steps: steps,
            mean_final_llr: llr,
            residual: resid,
            residual_se: (var / cf).sqrt(),
        })
    } else {
        None
    };

    ExperimentDetail {
        report,
        budget,
        wald,
    }
}

/// Run a sequence of experiments; per-spec failures are collected rather
/// than aborting the sweep.
pub fn sweep(specs: &[ExperimentSpec]) -> Vec<Result<MonteCarloReport, HarnessError>> {
    specs.iter().map(run_experiment).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::procedures::{
        DecisionRule, FixedSampleConfig, GeneralStConfig, SimpleStConfig, SprtConfig,
    };

    fn gaussian(theta: f64) -> DistributionPair {
        DistributionPair::gaussian_shift(theta).unwrap()
    }

    fn simple_st_spec(n: usize, s: usize, theta: f64, delta: f64, m: u64, trials: u64) -> ExperimentSpec {
        ExperimentSpec {
            n,
            s,
            pair: gaussian(theta),
            procedure: ProcedureConfig::SimpleSt(SimpleStConfig { delta, m }),
            trials,
            base_seed: 0xD15EA5E,
            support_placement: SupportPlacement::UniformRandom,
        }
    }

    #[test]
    fn fwer_oracle_examples() {
        assert_eq!(fwer_oracle(0.0, 0.0, 100, 5), 0.0);
        assert_eq!(fwer_oracle(0.0, 1.0, 100, 5), 1.0);
        // direct evaluation of 1 - 0.99^10 * 0.999^990
        let v = fwer_oracle(1e-3, 1e-2, 1000, 10);
        assert!((v - 0.664119114322).abs() < 1e-9, "{v}");
    }

    #[test]
    fn halfwidth_normal_and_wilson() {
        // plenty of both outcomes: plain normal approximation
        let hw = binomial_halfwidth(500, 1000);
        assert!((hw - 1.959963984540054 * (0.25f64 / 1000.0).sqrt()).abs() < 1e-12);
        // sparse successes: Wilson fallback is nonzero even at 0 successes
        let hw0 = binomial_halfwidth(0, 1000);
        assert!(hw0 > 0.0 && hw0 < 0.01);
        // monotone sanity: Wilson width shrinks with n
        assert!(binomial_halfwidth(0, 10_000) < hw0);
    }

    #[test]
    fn determinism_single_trial_and_worker_counts() {
        let spec = simple_st_spec(64, 4, 2.0, 0.2, 4, 1);
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a, b);

        let spec = simple_st_spec(64, 4, 2.0, 0.2, 4, 50);
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool3 = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let r1 = pool1.install(|| run_experiment(&spec)).unwrap();
        let r3 = pool3.install(|| run_experiment(&spec)).unwrap();
        assert_eq!(r1, r3);
    }

    #[test]
    fn support_placement_modes() {
        let streams = Substreams::for_trial(5, 0);
        let fixed = place_support(100, 3, SupportPlacement::FixedFirstS, &streams);
        assert_eq!(fixed, (0..3).collect());
        let random = place_support(100, 3, SupportPlacement::UniformRandom, &streams);
        assert_eq!(random.len(), 3);
        assert!(random.iter().all(|&i| i < 100));
        // deterministic given the trial streams
        assert_eq!(
            random,
            place_support(100, 3, SupportPlacement::UniformRandom, &streams)
        );
    }

    #[test]
    fn indistinguishable_pair_fails_recovery() {
        // null equals alternative: no budget separates anything
        let spec = ExperimentSpec {
            n: 64,
            s: 2,
            pair: DistributionPair::bernoulli_pair(0.5, 0.5).unwrap(),
            procedure: ProcedureConfig::GeneralSt(GeneralStConfig {
                delta: 0.5,
                m: 20,
                rho: 0.5,
            }),
            trials: 200,
            base_seed: 9,
            support_placement: SupportPlacement::UniformRandom,
        };
        let report = run_experiment(&spec).unwrap();
        assert!(report.fwer_hat >= 0.95, "fwer {}", report.fwer_hat);
        // zero divergence classifies as unreliable at any budget
        assert_eq!(report.bound_context.regime, bounds::Regime::Unreliable);
    }

    #[test]
    fn simple_st_meets_its_guarantee_empirically() {
        // theta = 10, n = 64, s = 4: the sufficient budget rounds to m = 2
        let budget = bounds::simple_st_budget(64.0, 4.0, 0.1, 10.0).unwrap();
        let m = bounds::round_up_to_even(budget);
        assert_eq!(m, 2);
        let spec = simple_st_spec(64, 4, 10.0, 0.1, m, 2000);
        let report = run_experiment(&spec).unwrap();
        assert!(
            report.fwer_hat <= 0.1 + 3.0 * report.fwer_halfwidth,
            "fwer {} hw {}",
            report.fwer_hat,
            report.fwer_halfwidth
        );
    }

    #[test]
    fn oracle_consistency_for_simple_st() {
        // per-component independence holds by construction for simple ST
        let spec = simple_st_spec(256, 4, 2.0, 0.2, 6, 2000);
        let report = run_experiment(&spec).unwrap();
        let oracle = fwer_oracle(report.alpha_hat, report.beta_hat, 256, 4);
        assert!(
            (report.fwer_hat - oracle).abs() <= 4.0 * report.fwer_halfwidth,
            "fwer {} oracle {} hw {}",
            report.fwer_hat,
            oracle,
            report.fwer_halfwidth
        );
    }

    #[test]
    fn null_pass_survival_is_calibrated() {
        // each pass keeps a null component with probability exactly 1/2;
        // survival events are reconstructed from the sample accounting
        let spec = simple_st_spec(256, 4, 2.0, 0.2, 6, 400);
        let passes = crate::procedures::simple_st_passes(256, 0.2);
        let per_pass = 3u64;
        let mut entries = 0u64;
        let mut survivals = 0u64;
        for t in 0..spec.trials {
            let streams = Substreams::for_trial(spec.base_seed, t);
            let support = place_support(spec.n, spec.s, spec.support_placement, &streams);
            let instance = ProblemInstance::new(spec.n, support, 0).unwrap();
            let outcome = run_procedure(&spec.procedure, &instance, &spec.pair, &streams).unwrap();
            for i in 0..spec.n {
                if instance.support().contains(&i) {
                    continue;
                }
                let sampled_passes = outcome.samples_per_index[i] / per_pass;
                assert!(sampled_passes >= 1 && sampled_passes <= passes);
                entries += sampled_passes;
                let survived_final = outcome.estimated_support.contains(&i) as u64;
                survivals += sampled_passes - 1 + survived_final;
            }
        }
        let frac = survivals as f64 / entries as f64;
        let se = (0.5 * 0.5 / entries as f64).sqrt();
        assert!(
            (frac - 0.5).abs() <= 4.0 * se,
            "survival fraction {frac}, entries {entries}"
        );
    }

    #[test]
    fn general_st_budget_invariant_at_valid_config() {
        // conditioned on no false negatives the expected total is <= n m
        let spec = ExperimentSpec {
            n: 1024,
            s: 4,
            pair: gaussian(2.0),
            procedure: ProcedureConfig::GeneralSt(GeneralStConfig {
                delta: 0.5,
                m: 10,
                rho: 0.5,
            }),
            trials: 400,
            base_seed: 0xB0D6E7,
            support_placement: SupportPlacement::UniformRandom,
        };
        let detail = run_experiment_detailed(&spec).unwrap();
        assert!(detail.budget.zero_fn_trials > 0);
        let cap = 1024.0 * 10.0 + 3.0 * detail.budget.conditional_se_total;
        assert!(
            detail.budget.conditional_mean_total <= cap,
            "conditional mean {} vs cap {cap}",
            detail.budget.conditional_mean_total
        );
        assert!(detail.report.budget_ok);
        // unconditional mean is reported alongside
        assert!(detail.budget.unconditional_mean_total.is_finite());
    }

    #[test]
    fn sprt_detail_carries_wald_diagnostic() {
        let spec = ExperimentSpec {
            n: 64,
            s: 4,
            pair: gaussian(1.0),
            procedure: ProcedureConfig::Sprt(SprtConfig {
                epsilon: 0.2,
                j_max: 100_000,
            }),
            trials: 100,
            base_seed: 77,
            support_placement: SupportPlacement::UniformRandom,
        };
        let detail = run_experiment_detailed(&spec).unwrap();
        let wald = detail.wald.expect("sprt wald diagnostic");
        assert_eq!(wald.components, 400); // no truncation at this drift
        assert!(wald.residual.abs() <= 5.0 * wald.residual_se);
        // SPRT has no nominal budget: flag is vacuous
        assert!(detail.report.budget_ok);
    }

    #[test]
    fn sweep_preserves_order_and_collects_errors() {
        let good = simple_st_spec(32, 2, 2.0, 0.2, 4, 10);
        let bad = ExperimentSpec {
            procedure: ProcedureConfig::GeneralSt(GeneralStConfig {
                delta: 0.5,
                m: 1, // schedule underflows
                rho: 0.5,
            }),
            ..simple_st_spec(1024, 4, 2.0, 0.5, 4, 10)
        };
        let out = sweep(&[good.clone(), bad, good]);
        assert_eq!(out.len(), 3);
        assert!(out[0].is_ok());
        assert!(out[1].is_err());
        assert!(out[2].is_ok());
        assert!(sweep(&[]).is_empty());
        // duplicate specs give identical reports
        let a = out[0].as_ref().unwrap();
        let c = out[2].as_ref().unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn fwer_is_nonincreasing_along_a_budget_grid() {
        // m-grid sweep around the sequential rate: error rates fall as the
        // budget grows, up to confidence-interval noise
        let specs: Vec<ExperimentSpec> = [2u64, 4, 8]
            .into_iter()
            .map(|m| ExperimentSpec {
                n: 512,
                s: 8,
                pair: gaussian(2.0),
                procedure: ProcedureConfig::FixedSample(FixedSampleConfig {
                    m,
                    rule: DecisionRule::TopS,
                }),
                trials: 300,
                base_seed: 0xCAFE,
                support_placement: SupportPlacement::UniformRandom,
            })
            .collect();
        let reports: Vec<MonteCarloReport> =
            sweep(&specs).into_iter().map(|r| r.unwrap()).collect();
        for pair in reports.windows(2) {
            let noise = pair[0].fwer_halfwidth + pair[1].fwer_halfwidth;
            assert!(
                pair[1].fwer_hat <= pair[0].fwer_hat + noise,
                "{} then {}",
                pair[0].fwer_hat,
                pair[1].fwer_hat
            );
        }
        // the grid straddles the transition: failing at the bottom,
        // mostly succeeding at the top
        assert!(reports[0].fwer_hat > 0.9);
        assert!(reports[2].fwer_hat < 0.2);
    }

    #[test]
    fn incompatible_spec_is_rejected() {
        let mut spec = simple_st_spec(32, 2, 2.0, 0.2, 4, 10);
        spec.pair = gaussian(2.0).with_alt_known(false);
        spec.procedure = ProcedureConfig::Sprt(SprtConfig {
            epsilon: 0.1,
            j_max: 100,
        });
        assert!(matches!(
            run_experiment(&spec),
            Err(HarnessError::IncompatibleSpec(_))
        ));
        spec.procedure = ProcedureConfig::FixedSample(FixedSampleConfig {
            m: 2,
            rule: DecisionRule::LlrThreshold(0.0),
        });
        assert!(matches!(
            run_experiment(&spec),
            Err(HarnessError::IncompatibleSpec(_))
        ));
    }

    #[test]
    fn trial_error_reports_offending_seed() {
        let spec = ExperimentSpec {
            n: 1024,
            s: 4,
            pair: gaussian(2.0),
            procedure: ProcedureConfig::GeneralSt(GeneralStConfig {
                delta: 0.5,
                m: 1,
                rho: 0.5,
            }),
            trials: 3,
            base_seed: 11,
            support_placement: SupportPlacement::UniformRandom,
        };
        match run_experiment(&spec) {
            Err(HarnessError::Trial { trial, seed, .. }) => {
                assert_eq!(trial, 0); // lowest failing trial wins
                assert_eq!(seed, Substreams::for_trial(11, 0).trial_seed());
            }
            other => panic!("expected trial error, got {other:?}"),
        }
    }
}
