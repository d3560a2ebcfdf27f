//! Sample-complexity bounds and schedule constants.
//!
//! Pure evaluators for the expressions that position an experiment relative
//! to the recovery phase transitions: the finite-sample and asymptotic
//! necessary conditions for sequential procedures, the necessary condition
//! for non-sequential procedures, the SPRT thresholds, and the sequential
//! thresholding budget constants. Nothing here proves anything; these are
//! the formulas, evaluated.
//!
//! All logarithms are natural unless a quantity is explicitly a number of
//! halving steps, so divergences (in nats) and `ln s` share units. Dimension
//! and sparsity arguments are real-valued: the evaluators are functions of
//! the formulas' variables, and callers with integer problems cast.

use thiserror::Error;

use crate::distributions::LlrStats;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("divergence is zero; the rate is undefined")]
    DivergenceZero,
    #[error("budget constant is not positive (outside the bound's valid regime): {0}")]
    NotPositive(String),
    #[error("sparsity regime violated: {0}")]
    SparsityRegimeViolation(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Where a given budget sits relative to a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Reliable,
    Unreliable,
    Indeterminate,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Reliable => "reliable",
            Regime::Unreliable => "unreliable",
            Regime::Indeterminate => "indeterminate",
        }
    }
}

/// Direction of a bound: a necessary condition can only flag budgets at or
/// below it as unreliable, a sufficient condition can only certify budgets
/// above it as reliable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    SequentialNecessary,
    NonSequentialNecessary,
    SprtSufficient,
    ThresholdingSufficient,
}

impl BoundKind {
    fn is_necessary(&self) -> bool {
        matches!(
            self,
            BoundKind::SequentialNecessary | BoundKind::NonSequentialNecessary
        )
    }
}

/// Inputs echoed back with every bound evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundInputs {
    pub n: Option<f64>,
    pub s: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub rho: Option<f64>,
    pub d01: Option<f64>,
    pub d10: Option<f64>,
    pub var01: Option<f64>,
}

/// An evaluated bound: the samples-per-dimension threshold, the error-rate
/// floor it implies when violated, and a regime classification (set once a
/// candidate budget is supplied via [`BoundReport::with_budget`]).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub m_required: f64,
    pub pe_floor: f64,
    pub regime: Regime,
    pub inputs: BoundInputs,
}

impl BoundReport {
    /// Classify a candidate budget `m` against this bound.
    pub fn classify(&self, m: f64) -> Regime {
        if self.m_required.is_nan() || m.is_nan() {
            return Regime::Indeterminate;
        }
        if self.kind.is_necessary() {
            if m <= self.m_required {
                Regime::Unreliable
            } else {
                Regime::Indeterminate
            }
        } else if m >= self.m_required {
            Regime::Reliable
        } else {
            Regime::Indeterminate
        }
    }

    pub fn with_budget(mut self, m: f64) -> Self {
        self.regime = self.classify(m);
        if self.kind.is_necessary() && self.regime != Regime::Unreliable {
            // the floor only binds when the budget is at or below the bound
            self.pe_floor = 0.0;
        }
        self
    }
}

/// Finite-sample necessary condition for any coordinate-wise sequential
/// procedure: with `m <= (ln s + ln(1/(4 delta))) / dkl` samples per
/// dimension the family-wise error rate is at least `1 - exp(-delta)`.
pub fn seq_lower_bound(s: f64, delta: f64, stats: &LlrStats) -> Result<BoundReport, BoundsError> {
    if s < 1.0 {
        return Err(BoundsError::InvalidParameter(format!("s must be >= 1, got {s}")));
    }
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(BoundsError::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let numer = s.ln() + (1.0 / (4.0 * delta)).ln();
    let m_required = if stats.dkl > 0.0 {
        (numer / stats.dkl).max(0.0)
    } else {
        f64::INFINITY
    };
    Ok(BoundReport {
        kind: BoundKind::SequentialNecessary,
        m_required,
        pe_floor: 1.0 - (-delta).exp(),
        regime: Regime::Indeterminate,
        inputs: BoundInputs {
            s: Some(s),
            delta: Some(delta),
            d01: Some(stats.d01),
            d10: Some(stats.d10),
            ..Default::default()
        },
    })
}

/// Asymptotic per-dimension rate below which no coordinate-wise sequential
/// procedure is reliable (under sub-linear sparsity): `ln(s) / d01`.
pub fn seq_rate(s: f64, stats: &LlrStats) -> Result<f64, BoundsError> {
    if s < 1.0 {
        return Err(BoundsError::InvalidParameter(format!("s must be >= 1, got {s}")));
    }
    if s == 1.0 {
        // degenerate: ln 1 = 0, any positive budget clears the bound
        return Ok(0.0);
    }
    if stats.d01 <= 0.0 {
        return Err(BoundsError::DivergenceZero);
    }
    Ok(s.ln() / stats.d01)
}

/// Asymptotic per-dimension rate below which no coordinate-wise
/// non-sequential procedure is reliable: `ln(n) / d10`.
pub fn nonseq_rate(n: f64, stats: &LlrStats) -> Result<f64, BoundsError> {
    if n < 2.0 {
        return Err(BoundsError::InvalidParameter(format!("n must be >= 2, got {n}")));
    }
    if stats.d10 <= 0.0 {
        return Err(BoundsError::DivergenceZero);
    }
    Ok(n.ln() / stats.d10)
}

/// SPRT thresholds in both domains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprtThresholds {
    pub gamma_l: f64,
    pub gamma_u: f64,
    pub log_gamma_l: f64,
    pub log_gamma_u: f64,
}

/// Thresholds achieving vanishing error for the parallel SPRT:
/// `gamma_l = s^-(1+eps)`, `gamma_u = (n-s)^(1+eps)`.
pub fn sprt_thresholds(n: f64, s: f64, epsilon: f64) -> Result<SprtThresholds, BoundsError> {
    if !(epsilon > 0.0) {
        return Err(BoundsError::InvalidParameter(format!(
            "epsilon must be > 0, got {epsilon}"
        )));
    }
    if s < 1.0 || n - s < 1.0 {
        return Err(BoundsError::InvalidParameter(format!(
            "need s >= 1 and n - s >= 1, got n={n}, s={s}"
        )));
    }
    let log_gamma_l = -(1.0 + epsilon) * s.ln();
    let log_gamma_u = (1.0 + epsilon) * (n - s).ln();
    Ok(SprtThresholds {
        gamma_l: log_gamma_l.exp(),
        gamma_u: log_gamma_u.exp(),
        log_gamma_l,
        log_gamma_u,
    })
}

/// Sufficient per-dimension budget for simple sequential thresholding in the
/// Gaussian mean-shift setting:
/// `(ln s + ln(log2(2n/delta)) + ln(1/delta)) / (theta^2 / 4)`.
/// Callers round up to the next even integer to obtain a usable budget.
pub fn simple_st_budget(n: f64, s: f64, delta: f64, theta: f64) -> Result<f64, BoundsError> {
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(BoundsError::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if !(theta > 0.0) || s < 1.0 || n < 1.0 {
        return Err(BoundsError::InvalidParameter(
            "need theta > 0, n >= 1, s >= 1".into(),
        ));
    }
    let k_real = (2.0 * n / delta).log2();
    Ok((s.ln() + k_real.ln() + (1.0 / delta).ln()) / (theta * theta / 4.0))
}

/// Round a real budget up to the next even integer >= 2.
pub fn round_up_to_even(m: f64) -> u64 {
    let mut k = m.ceil().max(2.0) as u64;
    if k % 2 == 1 {
        k += 1;
    }
    k
}

/// The sequential-thresholding budget constant and the finite-sample
/// sufficient budget it yields.
#[derive(Debug, Clone, PartialEq)]
pub struct StBudget {
    /// The constant `c_n`; approaches `d01` in the favorable limit.
    pub c_n: f64,
    /// Sufficient samples per dimension: `(ln s + ln(1/delta) + ln 4) / c_n`.
    pub sufficient_m: f64,
    pub report: BoundReport,
}

/// Evaluate the thresholding budget constant
///
/// ```text
/// c_n = rho^2 * n/(n + s K^2)
///       * ( d01 - sqrt( var01 / ((rho^2 n ln s / (d01 (n + s K^2)) - 1) (1 - rho)) ) )
/// ```
///
/// and the sufficient budget `m >= (ln s + ln(1/delta) + ln 4) / c_n`.
/// Returns `NotPositive` when the inner square-root argument or `c_n` itself
/// is not positive, i.e. when the parameters sit outside the bound's valid
/// regime. When `var01 = 0` the subtracted term vanishes regardless.
pub fn st_cn(
    n: f64,
    s: f64,
    m: f64,
    delta: f64,
    rho: f64,
    k_steps: u64,
    stats: &LlrStats,
) -> Result<StBudget, BoundsError> {
    if !(0.5..1.0).contains(&rho) {
        return Err(BoundsError::InvalidParameter(format!(
            "rho must lie in [1/2, 1), got {rho}"
        )));
    }
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(BoundsError::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if s < 2.0 || n < s {
        return Err(BoundsError::InvalidParameter(format!(
            "need 2 <= s <= n, got n={n}, s={s}"
        )));
    }
    if stats.d01 <= 0.0 {
        return Err(BoundsError::DivergenceZero);
    }
    let kk = (k_steps as f64) * (k_steps as f64);
    let shrink = n / (n + s * kk);
    let prefactor = rho * rho * shrink;
    let inner = rho * rho * n * s.ln() / (stats.d01 * (n + s * kk)) - 1.0;
    let penalty = if stats.var01 == 0.0 {
        0.0
    } else {
        let denom = inner * (1.0 - rho);
        if denom <= 0.0 {
            return Err(BoundsError::NotPositive(format!(
                "square-root argument is not positive (inner term {inner:.6})"
            )));
        }
        (stats.var01 / denom).sqrt()
    };
    let c_n = prefactor * (stats.d01 - penalty);
    if c_n <= 0.0 {
        return Err(BoundsError::NotPositive(format!("c_n = {c_n:.6}")));
    }
    let sufficient_m = (s.ln() + (1.0 / delta).ln() + 4.0f64.ln()) / c_n;
    let report = BoundReport {
        kind: BoundKind::ThresholdingSufficient,
        m_required: sufficient_m,
        pe_floor: 0.0,
        regime: Regime::Indeterminate,
        inputs: BoundInputs {
            n: Some(n),
            s: Some(s),
            delta: Some(delta),
            rho: Some(rho),
            d01: Some(stats.d01),
            var01: Some(stats.var01),
            ..Default::default()
        },
    }
    .with_budget(m);
    Ok(StBudget {
        c_n,
        sufficient_m,
        report,
    })
}

/// The asymptotically optimal thresholding schedule:
/// `delta = 1/ln s`, `rho = 1 - 1/sqrt(ln s)`, and the implied step count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cor2Schedule {
    pub delta: f64,
    pub rho: f64,
    pub k_steps: u64,
}

/// Evaluate the optimal-schedule parameters. Requires `ln s >= 4` so that
/// `rho >= 1/2`, and the sub-polylog sparsity regime `s < n / (ln n)^2`.
pub fn cor2_schedule(n: f64, s: f64) -> Result<Cor2Schedule, BoundsError> {
    if s < 3.0 {
        return Err(BoundsError::InvalidParameter(format!(
            "s must be >= 3 so that delta < 1, got {s}"
        )));
    }
    let ln_s = s.ln();
    if ln_s < 4.0 {
        return Err(BoundsError::InvalidParameter(format!(
            "need ln s >= 4 so that rho >= 1/2; s = {s} gives ln s = {ln_s:.4}"
        )));
    }
    if s >= n / (n.ln() * n.ln()) {
        return Err(BoundsError::SparsityRegimeViolation(format!(
            "need s < n/(ln n)^2 = {:.4}, got s = {s}",
            n / (n.ln() * n.ln())
        )));
    }
    let delta = 1.0 / ln_s;
    let rho = 1.0 - 1.0 / ln_s.sqrt();
    let k_steps = ceil_log(1.0 / (1.0 - rho), 2.0 * (n - s) / delta);
    Ok(Cor2Schedule { delta, rho, k_steps })
}

/// Smallest integer `k >= 0` with `base^k >= x`, robust to the floating-point
/// boundary cases where `log(x)/log(base)` lands a hair off an integer.
pub fn ceil_log(base: f64, x: f64) -> u64 {
    assert!(base > 1.0 && x > 0.0);
    if x <= 1.0 {
        return 0;
    }
    let mut k = (x.ln() / base.ln()).ceil().max(0.0) as u64;
    while k > 0 && base.powi(k as i32 - 1) >= x * (1.0 - 1e-12) {
        k -= 1;
    }
    while base.powi(k as i32) < x * (1.0 - 1e-12) {
        k += 1;
    }
    k
}

/// Which divergence drives the regime classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DivergenceSelect {
    /// `d01` in the clearly sparse regime (`s/n <= 0.01`), `dkl` otherwise.
    #[default]
    Auto,
    D01,
    Dkl,
}

/// The sequential necessary-rate bound used as experiment context: the
/// required rate, the error floor when a budget sits at or below it (the
/// asymptotic floor is 1/5), and the classification of `m` against it.
pub fn context_report(
    m: f64,
    n: f64,
    s: f64,
    stats: &LlrStats,
    select: DivergenceSelect,
) -> BoundReport {
    let d = match select {
        DivergenceSelect::D01 => stats.d01,
        DivergenceSelect::Dkl => stats.dkl,
        DivergenceSelect::Auto => {
            if s / n <= 0.01 {
                stats.d01
            } else {
                stats.dkl
            }
        }
    };
    let m_required = if s <= 1.0 {
        0.0
    } else if d > 0.0 {
        s.ln() / d
    } else {
        f64::INFINITY
    };
    BoundReport {
        kind: BoundKind::SequentialNecessary,
        m_required,
        pe_floor: 0.2,
        regime: Regime::Indeterminate,
        inputs: BoundInputs {
            n: Some(n),
            s: Some(s),
            d01: Some(stats.d01),
            d10: Some(stats.d10),
            ..Default::default()
        },
    }
    .with_budget(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(d01: f64, d10: f64, var01: f64) -> LlrStats {
        LlrStats::new(d01, d10, var01)
    }

    #[test]
    fn seq_lower_bound_regression() {
        let r = seq_lower_bound(100.0, 0.05, &stats(1.0, 1.0, 1.0)).unwrap();
        assert!((r.m_required - 6.2146).abs() < 5e-5, "{}", r.m_required);
        assert!((r.pe_floor - 0.04877).abs() < 5e-6, "{}", r.pe_floor);
        // small delta: floor approximately delta
        let r2 = seq_lower_bound(100.0, 1e-4, &stats(1.0, 1.0, 1.0)).unwrap();
        assert!((r2.pe_floor - 1e-4).abs() < 1e-8);
        // degenerate sparsity: zero bound, any positive budget clears it
        let r3 = seq_lower_bound(1.0, 0.25, &stats(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(r3.m_required, 0.0);
        assert_eq!(r3.classify(0.5), Regime::Indeterminate);
        assert_eq!(r3.classify(0.0), Regime::Unreliable);
    }

    #[test]
    fn rates_and_homogeneity() {
        // mathematical identity cases: s = e^2, n = e^3
        let e2 = std::f64::consts::E.powi(2);
        let e3 = std::f64::consts::E.powi(3);
        assert!((seq_rate(e2, &stats(1.0, 1.0, 0.0)).unwrap() - 2.0).abs() < 1e-12);
        assert!((nonseq_rate(e3, &stats(1.0, 1.0, 0.0)).unwrap() - 3.0).abs() < 1e-12);
        // Gaussian theta = 2 cases
        let g = stats(2.0, 2.0, 4.0);
        assert!((seq_rate(16.0, &g).unwrap() - 1.3863).abs() < 5e-5);
        assert!((nonseq_rate(4096.0, &g).unwrap() - 4.1589).abs() < 5e-5);
        // doubling the divergence halves the rate exactly
        let r1 = seq_rate(100.0, &stats(0.7, 0.7, 0.0)).unwrap();
        let r2 = seq_rate(100.0, &stats(1.4, 1.4, 0.0)).unwrap();
        assert_eq!(r1, 2.0 * r2);
        // symmetric divergences: gap is exactly ln n / ln s
        let gap = nonseq_rate(4096.0, &g).unwrap() / seq_rate(16.0, &g).unwrap();
        assert!((gap - 4096f64.ln() / 16f64.ln()).abs() < 1e-12);
        assert_eq!(seq_rate(2.0, &stats(0.0, 1.0, 0.0)), Err(BoundsError::DivergenceZero));
        assert_eq!(nonseq_rate(2.0, &stats(1.0, 0.0, 0.0)), Err(BoundsError::DivergenceZero));
        assert_eq!(seq_rate(1.0, &stats(0.0, 0.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn sprt_threshold_values() {
        let t = sprt_thresholds(10100.0, 100.0, 0.1).unwrap();
        assert!((t.gamma_l - 6.3096e-3).abs() < 5e-7, "{}", t.gamma_l);
        assert!((t.gamma_u - 2.51189e4).abs() < 5e-1, "{}", t.gamma_u);
        assert!((t.log_gamma_l + 5.0657).abs() < 5e-5);
        assert!((t.log_gamma_u - 10.1314).abs() < 5e-5);
        // epsilon -> 0+: gamma_l -> 1/s
        let t0 = sprt_thresholds(10100.0, 100.0, 1e-12).unwrap();
        assert!((t0.gamma_l - 0.01).abs() < 1e-10);
        assert!(sprt_thresholds(10.0, 10.0, 0.1).is_err());
        assert!(sprt_thresholds(10.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn simple_st_budget_values() {
        let b = simple_st_budget(4096.0, 16.0, 0.1, 2.0).unwrap();
        assert!((b - 7.8677).abs() < 5e-5, "{b}");
        assert_eq!(round_up_to_even(b), 8);
        // theta scaling: doubling theta divides the budget by 4 exactly
        let b2 = simple_st_budget(4096.0, 16.0, 0.1, 4.0).unwrap();
        assert!((b - 4.0 * b2).abs() < 1e-12);
        // pinned degenerate regression: s = 1, delta = 1/e, n = e
        let d = (-1.0f64).exp();
        let b3 = simple_st_budget(std::f64::consts::E, 1.0, d, 2.0).unwrap();
        let expect = ((2.0 * std::f64::consts::E / d).log2().ln() + 1.0) / 1.0;
        assert!((b3 - expect).abs() < 1e-12);
        assert_eq!(round_up_to_even(0.241), 2);
        assert_eq!(round_up_to_even(7.0), 8);
        assert_eq!(round_up_to_even(8.0), 8);
    }

    #[test]
    fn thm4_budget_monotonicity() {
        // finite-difference sign checks on a grid: decreasing in theta,
        // increasing in n, s, and 1/delta
        for n in [256.0, 4096.0, 65536.0] {
            for s in [4.0, 16.0, 64.0] {
                for delta in [0.02, 0.1, 0.4] {
                    for theta in [0.5, 2.0, 5.0] {
                        let base = simple_st_budget(n, s, delta, theta).unwrap();
                        assert!(simple_st_budget(n, s, delta, theta * 1.1).unwrap() < base);
                        assert!(simple_st_budget(n * 2.0, s, delta, theta).unwrap() > base);
                        assert!(simple_st_budget(n, s * 2.0, delta, theta).unwrap() > base);
                        assert!(simple_st_budget(n, s, delta * 0.5, theta).unwrap() > base);
                    }
                }
            }
        }
    }

    #[test]
    fn st_cn_zero_variance_closed_form() {
        let st = stats(2.0, 2.0, 0.0);
        let b = st_cn(1024.0, 4.0, 10.0, 0.5, 0.5, 12, &st).unwrap();
        let expect = 0.25 * 1024.0 / (1024.0 + 4.0 * 144.0) * 2.0;
        assert!((b.c_n - expect).abs() < 1e-12);
        // limiting prefactor: rho = 1/2 and s K^2 << n gives ~ d01/4
        let b2 = st_cn(1e12, 2.0, 10.0, 0.5, 0.5, 1, &stats(2.0, 2.0, 0.0)).unwrap();
        assert!((b2.c_n - 0.5).abs() < 1e-6, "{}", b2.c_n);
    }

    #[test]
    fn st_cn_positive_case_pinned() {
        // hand-expanded evaluation of the same expression, frozen
        let st = stats(1.0, 1.0, 0.01);
        let b = st_cn(1e6, 1e4, 20.0, 0.1, 0.9, 3, &st).unwrap();
        let shrink = 1e6 / (1e6 + 1e4 * 9.0);
        let inner = 0.81 * 1e6 * (1e4f64).ln() / (1.0 * (1e6 + 9e4)) - 1.0;
        let expect = 0.81 * shrink * (1.0 - (0.01 / (inner * 0.1)).sqrt());
        assert!((b.c_n - expect).abs() < 1e-12);
        assert!((b.c_n - 0.645935).abs() < 1e-4, "{}", b.c_n);
        assert!(b.sufficient_m > 0.0);
        assert_eq!(b.report.regime, Regime::Reliable); // m = 20 exceeds sufficient_m
    }

    #[test]
    fn st_cn_outside_regime_is_not_positive() {
        // the optimal-schedule point at desk scale: evaluating the inner term
        // gives a negative square-root argument, so the sentinel is the pin
        let sched = cor2_schedule(1e6, 100.0).unwrap();
        let st = stats(2.0, 2.0, 4.0);
        let r = st_cn(1e6, 100.0, 10.0, sched.delta, sched.rho, sched.k_steps, &st);
        assert!(matches!(r, Err(BoundsError::NotPositive(_))), "{r:?}");
    }

    #[test]
    fn st_cn_never_exceeds_d01() {
        // prefactors <= 1 and the subtracted term >= 0
        let mut seed = 0x9E3779B97F4A7C15u64;
        let mut randf = move || {
            seed = crate::rng::mix64(seed);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut checked = 0;
        for _ in 0..4000 {
            let n = 100.0 + randf() * 1e7;
            let s = (2.0 + randf() * (n / 2.0 - 2.0)).floor();
            let rho = 0.5 + randf() * 0.499;
            let k = 1 + (randf() * 30.0) as u64;
            let d01 = 0.1 + randf() * 5.0;
            let var01 = randf() * 2.0;
            if let Ok(b) = st_cn(n, s, 10.0, 0.1, rho, k, &stats(d01, d01, var01)) {
                assert!(b.c_n <= d01 + 1e-12, "c_n {} > d01 {}", b.c_n, d01);
                checked += 1;
            }
        }
        assert!(checked > 10, "too few valid samples: {checked}");
    }

    #[test]
    fn cor2_schedule_values() {
        let sched = cor2_schedule(1e6, 100.0).unwrap();
        assert!((sched.delta - 0.2171472410).abs() < 1e-9);
        assert!((sched.rho - 0.5340093982).abs() < 1e-9);
        assert_eq!(sched.k_steps, 22);
        // boundary: ln s >= 4 requires s >= 55
        assert!(cor2_schedule(1e6, 54.0).is_err());
        let ok = cor2_schedule(1e6, 55.0).unwrap();
        assert!(ok.rho >= 0.5);
        assert!((ok.delta - 1.0 / 55f64.ln()).abs() < 1e-15);
        // sparsity regime check
        assert!(matches!(
            cor2_schedule(4096.0, 100.0),
            Err(BoundsError::SparsityRegimeViolation(_))
        ));
    }

    #[test]
    fn ceil_log_boundaries() {
        assert_eq!(ceil_log(2.0, 4096.0), 12);
        assert_eq!(ceil_log(2.0, 4097.0), 13);
        assert_eq!(ceil_log(2.0, 4095.9), 12);
        assert_eq!(ceil_log(2.0, 1.0), 0);
        assert_eq!(ceil_log(2.0, 81920.0), 17);
        assert_eq!(ceil_log(2.0, 81600.0), 17);
        assert_eq!(ceil_log(2.0, 4080.0), 12);
    }

    #[test]
    fn classification_directions() {
        let g = stats(2.0, 2.0, 4.0);
        let ctx = context_report(1.0, 4096.0, 16.0, &g, DivergenceSelect::Auto);
        assert_eq!(ctx.regime, Regime::Unreliable);
        assert_eq!(ctx.pe_floor, 0.2);
        let ctx2 = context_report(3.0, 4096.0, 16.0, &g, DivergenceSelect::Auto);
        assert_eq!(ctx2.regime, Regime::Indeterminate);
        assert_eq!(ctx2.pe_floor, 0.0);
        // zero divergence: nothing is reliable
        let z = context_report(100.0, 64.0, 2.0, &stats(0.0, 0.0, 0.0), DivergenceSelect::Auto);
        assert_eq!(z.regime, Regime::Unreliable);
        // sufficient bounds certify from above
        let suff = BoundReport {
            kind: BoundKind::SprtSufficient,
            m_required: 5.0,
            pe_floor: 0.0,
            regime: Regime::Indeterminate,
            inputs: BoundInputs::default(),
        };
        assert_eq!(suff.classify(6.0), Regime::Reliable);
        assert_eq!(suff.classify(4.0), Regime::Indeterminate);
    }

    #[test]
    fn evaluators_are_pure() {
        let g = stats(2.0, 2.0, 4.0);
        let a = seq_lower_bound(100.0, 0.05, &g).unwrap();
        let b = seq_lower_bound(100.0, 0.05, &g).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            st_cn(1e6, 1e4, 20.0, 0.1, 0.9, 3, &stats(1.0, 1.0, 0.01)).unwrap(),
            st_cn(1e6, 1e4, 20.0, 0.1, 0.9, 3, &stats(1.0, 1.0, 0.01)).unwrap()
        );
    }
}
