//! Python extension module exposing the main types and operations:
//! distribution pairs, procedure configurations, Monte Carlo experiments,
//! and the sample-complexity bound evaluators.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seqsparse::bounds;
use seqsparse::distributions::{DistributionPair, Hypothesis, LlrStats};
use seqsparse::harness::{self, ExperimentSpec, SupportPlacement};
use seqsparse::procedures::{
    DecisionRule, FixedSampleConfig, GeneralStConfig, ProcedureConfig, SimpleStConfig, SprtConfig,
};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_hypothesis(label: &str) -> PyResult<Hypothesis> {
    match label {
        "null" => Ok(Hypothesis::Null),
        "alt" => Ok(Hypothesis::Alt),
        other => Err(value_err(format!(
            "hypothesis must be 'null' or 'alt', got '{other}'"
        ))),
    }
}

/// Divergences and LLR variance of a pair, in nats.
#[pyclass(name = "LlrStats", frozen, get_all, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyLlrStats {
    d01: f64,
    d10: f64,
    dkl: f64,
    var01: f64,
}

#[pymethods]
impl PyLlrStats {
    #[new]
    fn new(d01: f64, d10: f64, var01: f64) -> Self {
        LlrStats::new(d01, d10, var01).into()
    }

    fn __repr__(&self) -> String {
        format!(
            "LlrStats(d01={}, d10={}, dkl={}, var01={})",
            self.d01, self.d10, self.dkl, self.var01
        )
    }
}

impl From<LlrStats> for PyLlrStats {
    fn from(s: LlrStats) -> Self {
        PyLlrStats {
            d01: s.d01,
            d10: s.d10,
            dkl: s.dkl,
            var01: s.var01,
        }
    }
}

impl From<&PyLlrStats> for LlrStats {
    fn from(s: &PyLlrStats) -> Self {
        LlrStats::new(s.d01, s.d10, s.var01)
    }
}

/// A null/alternative distribution pair.
#[pyclass(name = "DistributionPair", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDistributionPair {
    inner: DistributionPair,
}

#[pymethods]
impl PyDistributionPair {
    /// P0 = N(0, 1) vs P1 = N(theta, 1), theta > 0.
    #[staticmethod]
    #[pyo3(signature = (theta, alt_known = true))]
    fn gaussian_shift(theta: f64, alt_known: bool) -> PyResult<Self> {
        Ok(PyDistributionPair {
            inner: DistributionPair::gaussian_shift(theta)
                .map_err(value_err)?
                .with_alt_known(alt_known),
        })
    }

    /// P0 = Bernoulli(p0) vs P1 = Bernoulli(p1) with p1 >= p0.
    #[staticmethod]
    #[pyo3(signature = (p0, p1, alt_known = true))]
    fn bernoulli_pair(p0: f64, p1: f64, alt_known: bool) -> PyResult<Self> {
        Ok(PyDistributionPair {
            inner: DistributionPair::bernoulli_pair(p0, p1)
                .map_err(value_err)?
                .with_alt_known(alt_known),
        })
    }

    #[getter]
    fn alt_known(&self) -> bool {
        self.inner.alt_known()
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.kind().as_str()
    }

    /// `count` i.i.d. draws under 'null' or 'alt', from a fresh stream
    /// seeded with `seed`.
    fn sample(&self, hypothesis: &str, count: usize, seed: u64) -> PyResult<Vec<f64>> {
        let hyp = parse_hypothesis(hypothesis)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(self.inner.sample(hyp, count, &mut rng))
    }

    /// Log-likelihood ratio of a sample sequence, in nats.
    fn llr(&self, observations: Vec<f64>) -> PyResult<f64> {
        self.inner.llr(&observations).map_err(value_err)
    }

    /// The monotone scalar statistic of a sample sequence.
    fn test_statistic(&self, observations: Vec<f64>) -> f64 {
        self.inner.test_statistic(&observations)
    }

    /// Smallest gamma with P(T <= gamma | null) >= rho.
    fn null_quantile(&self, sample_count: u64, rho: f64) -> PyResult<f64> {
        self.inner
            .null_quantile(sample_count, rho)
            .map_err(value_err)
    }

    fn llr_stats(&self) -> PyResult<PyLlrStats> {
        Ok(self.inner.llr_stats().map_err(value_err)?.into())
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Configuration of one recovery procedure.
#[pyclass(name = "ProcedureConfig", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyProcedureConfig {
    inner: ProcedureConfig,
}

#[pymethods]
impl PyProcedureConfig {
    /// Fixed-sample baseline keeping the s largest statistics.
    #[staticmethod]
    fn fixed_sample_top_s(m: u64) -> PyResult<Self> {
        Self::build(ProcedureConfig::FixedSample(FixedSampleConfig {
            m,
            rule: DecisionRule::TopS,
        }))
    }

    /// Fixed-sample baseline thresholding the LLR at tau.
    #[staticmethod]
    fn fixed_sample_llr_threshold(m: u64, tau: f64) -> PyResult<Self> {
        Self::build(ProcedureConfig::FixedSample(FixedSampleConfig {
            m,
            rule: DecisionRule::LlrThreshold(tau),
        }))
    }

    /// Parallel SPRTs with thresholds s^-(1+epsilon), (n-s)^(1+epsilon).
    #[staticmethod]
    fn sprt(epsilon: f64, j_max: u64) -> PyResult<Self> {
        Self::build(ProcedureConfig::Sprt(SprtConfig { epsilon, j_max }))
    }

    /// Simple sequential thresholding (Gaussian pair, even budget).
    #[staticmethod]
    fn simple_st(delta: f64, m: u64) -> PyResult<Self> {
        Self::build(ProcedureConfig::SimpleSt(SimpleStConfig { delta, m }))
    }

    /// General sequential thresholding.
    #[staticmethod]
    fn general_st(delta: f64, m: u64, rho: f64) -> PyResult<Self> {
        Self::build(ProcedureConfig::GeneralSt(GeneralStConfig { delta, m, rho }))
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

impl PyProcedureConfig {
    fn build(inner: ProcedureConfig) -> PyResult<Self> {
        inner.validate().map_err(value_err)?;
        Ok(PyProcedureConfig { inner })
    }
}

/// Aggregated Monte Carlo results.
#[pyclass(name = "MonteCarloReport", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyMonteCarloReport {
    trials: u64,
    fwer_hat: f64,
    fwer_halfwidth: f64,
    alpha_hat: f64,
    beta_hat: f64,
    avg_samples_per_dim: f64,
    budget_ok: bool,
    truncation_rate: f64,
    /// Sequential necessary rate the budget is classified against.
    seq_necessary_m: f64,
    /// 'reliable', 'unreliable', or 'indeterminate'.
    regime: String,
}

#[pymethods]
impl PyMonteCarloReport {
    fn __repr__(&self) -> String {
        format!(
            "MonteCarloReport(trials={}, fwer_hat={}, fwer_halfwidth={}, alpha_hat={}, \
             beta_hat={}, avg_samples_per_dim={}, budget_ok={}, truncation_rate={}, \
             seq_necessary_m={}, regime='{}')",
            self.trials,
            self.fwer_hat,
            self.fwer_halfwidth,
            self.alpha_hat,
            self.beta_hat,
            self.avg_samples_per_dim,
            self.budget_ok,
            self.truncation_rate,
            self.seq_necessary_m,
            self.regime
        )
    }
}

/// Run a seeded Monte Carlo experiment and aggregate the error rates.
#[pyfunction]
#[pyo3(signature = (n, s, pair, procedure, trials, base_seed, support_placement = "uniform_random"))]
fn run_experiment(
    n: usize,
    s: usize,
    pair: &PyDistributionPair,
    procedure: &PyProcedureConfig,
    trials: u64,
    base_seed: u64,
    support_placement: &str,
) -> PyResult<PyMonteCarloReport> {
    let placement = match support_placement {
        "uniform_random" => SupportPlacement::UniformRandom,
        "fixed_first_s" => SupportPlacement::FixedFirstS,
        other => {
            return Err(value_err(format!(
                "support_placement must be 'uniform_random' or 'fixed_first_s', got '{other}'"
            )))
        }
    };
    let spec = ExperimentSpec {
        n,
        s,
        pair: pair.inner.clone(),
        procedure: procedure.inner.clone(),
        trials,
        base_seed,
        support_placement: placement,
    };
    let report = harness::run_experiment(&spec).map_err(value_err)?;
    Ok(PyMonteCarloReport {
        trials: report.trials,
        fwer_hat: report.fwer_hat,
        fwer_halfwidth: report.fwer_halfwidth,
        alpha_hat: report.alpha_hat,
        beta_hat: report.beta_hat,
        avg_samples_per_dim: report.avg_samples_per_dim,
        budget_ok: report.budget_ok,
        truncation_rate: report.truncation_rate,
        seq_necessary_m: report.bound_context.m_required,
        regime: report.bound_context.regime.as_str().to_string(),
    })
}

/// Exact family-wise error rate for independent per-component error rates.
#[pyfunction]
fn fwer_oracle(alpha: f64, beta: f64, n: usize, s: usize) -> f64 {
    harness::fwer_oracle(alpha, beta, n, s)
}

/// Asymptotic sequential necessary rate ln(s)/d01.
#[pyfunction]
fn seq_rate(s: f64, stats: &PyLlrStats) -> PyResult<f64> {
    bounds::seq_rate(s, &stats.into()).map_err(value_err)
}

/// Asymptotic non-sequential necessary rate ln(n)/d10.
#[pyfunction]
fn nonseq_rate(n: f64, stats: &PyLlrStats) -> PyResult<f64> {
    bounds::nonseq_rate(n, &stats.into()).map_err(value_err)
}

/// Finite-sample sequential bound: (required m, implied error floor).
#[pyfunction]
fn seq_lower_bound(s: f64, delta: f64, stats: &PyLlrStats) -> PyResult<(f64, f64)> {
    let r = bounds::seq_lower_bound(s, delta, &stats.into()).map_err(value_err)?;
    Ok((r.m_required, r.pe_floor))
}

/// SPRT thresholds: (gamma_l, gamma_u, log_gamma_l, log_gamma_u).
#[pyfunction]
fn sprt_thresholds(n: f64, s: f64, epsilon: f64) -> PyResult<(f64, f64, f64, f64)> {
    let t = bounds::sprt_thresholds(n, s, epsilon).map_err(value_err)?;
    Ok((t.gamma_l, t.gamma_u, t.log_gamma_l, t.log_gamma_u))
}

/// Sufficient simple-thresholding budget for the Gaussian pair (real-valued;
/// round up to the next even integer for a usable m).
#[pyfunction]
fn simple_st_budget(n: f64, s: f64, delta: f64, theta: f64) -> PyResult<f64> {
    bounds::simple_st_budget(n, s, delta, theta).map_err(value_err)
}

/// The asymptotically optimal thresholding schedule: (delta, rho, steps).
#[pyfunction]
fn cor2_schedule(n: f64, s: f64) -> PyResult<(f64, f64, u64)> {
    let c = bounds::cor2_schedule(n, s).map_err(value_err)?;
    Ok((c.delta, c.rho, c.k_steps))
}

/// Thresholding budget constant: (c_n, sufficient m). Raises ValueError when
/// the parameters are outside the bound's valid regime.
#[pyfunction]
fn st_cn(
    n: f64,
    s: f64,
    m: f64,
    delta: f64,
    rho: f64,
    k_steps: u64,
    stats: &PyLlrStats,
) -> PyResult<(f64, f64)> {
    let r = bounds::st_cn(n, s, m, delta, rho, k_steps, &stats.into()).map_err(value_err)?;
    Ok((r.c_n, r.sufficient_m))
}

/// Per-step sample counts of general sequential thresholding:
/// (steps, [m_1, ..., m_K]). Raises ValueError on schedule underflow.
#[pyfunction]
fn general_st_schedule(
    n: usize,
    s: usize,
    delta: f64,
    m: u64,
    rho: f64,
) -> PyResult<(u64, Vec<u64>)> {
    let sched =
        seqsparse::procedures::general_st_schedule(n, s, &GeneralStConfig { delta, m, rho })
            .map_err(value_err)?;
    Ok((sched.steps, sched.samples_per_step))
}

#[pymodule]
fn seqsparse_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistributionPair>()?;
    m.add_class::<PyLlrStats>()?;
    m.add_class::<PyProcedureConfig>()?;
    m.add_class::<PyMonteCarloReport>()?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(fwer_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(seq_rate, m)?)?;
    m.add_function(wrap_pyfunction!(nonseq_rate, m)?)?;
    m.add_function(wrap_pyfunction!(seq_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(sprt_thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(simple_st_budget, m)?)?;
    m.add_function(wrap_pyfunction!(cor2_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(st_cn, m)?)?;
    m.add_function(wrap_pyfunction!(general_st_schedule, m)?)?;
    Ok(())
}
