//! Null/alternative distribution pairs.
//!
//! A [`DistributionPair`] supplies everything the recovery procedures
//! consume: i.i.d. sampling under either hypothesis, pointwise
//! log-likelihood ratios, the divergences and LLR variance entering the
//! sample-complexity bounds, and null-distribution quantiles of the monotone
//! test statistic.
//!
//! Two families are first-class: a unit-variance Gaussian mean shift and a
//! Bernoulli pair. A general escape hatch ([`MlrModel`]) accepts a
//! user-supplied sampler and scalar statistic for any family with a monotone
//! likelihood ratio; its divergences and quantiles are estimated from seeded
//! Monte Carlo draws with a declared sample size.
//!
//! The `alt_known` flag models whether the alternative's parameter is
//! revealed to the procedure under test. When it is `false`, pointwise LLR
//! queries are refused; only the test statistic and null quantiles remain
//! available, which is exactly the interface sequential thresholding needs.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::rng::{mix64, SUPPORT_COMPONENT};

/// Which hypothesis to sample from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    Null,
    Alt,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("invalid distribution parameter: {0}")]
    InvalidParameter(String),
    #[error("pointwise LLR queries are not permitted when the alternative is undisclosed")]
    QueryNotPermitted,
    #[error("divergence is not finite for this pair")]
    NonFiniteDivergence,
}

/// Divergences and LLR variance of a pair, in nats.
///
/// `var01` is the variance of the single-sample LLR under the *null*; that is
/// the side a Chebyshev bound on the null statistic needs, and the one the
/// sequential-thresholding budget constant consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlrStats {
    /// D(P0 || P1)
    pub d01: f64,
    /// D(P1 || P0)
    pub d10: f64,
    /// max(d01, d10)
    pub dkl: f64,
    /// Var of the single-sample LLR under P0
    pub var01: f64,
}

impl LlrStats {
    pub fn new(d01: f64, d10: f64, var01: f64) -> Self {
        Self {
            d01,
            d10,
            dkl: d01.max(d10),
            var01,
        }
    }
}

/// User-supplied family for the general monotone-likelihood-ratio case.
///
/// `statistic` must be strictly increasing in the LLR for the model to be
/// usable by thresholding procedures. Divergences and null quantiles are
/// estimated by seeded Monte Carlo with the declared draw counts, so equal
/// models yield bit-equal answers.
pub struct MlrModel {
    pub label: String,
    sample_null: Arc<dyn Fn(&mut ChaCha8Rng) -> f64 + Send + Sync>,
    sample_alt: Arc<dyn Fn(&mut ChaCha8Rng) -> f64 + Send + Sync>,
    log_ratio: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    statistic: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    /// Draws used for each empirical null quantile (resolution 1/draws).
    pub quantile_draws: usize,
    /// Draws used when estimating divergences and the LLR variance.
    pub stats_draws: usize,
    /// Seed for all Monte Carlo estimation inside the model.
    pub mc_seed: u64,
}

impl MlrModel {
    pub fn new(
        label: impl Into<String>,
        sample_null: impl Fn(&mut ChaCha8Rng) -> f64 + Send + Sync + 'static,
        sample_alt: impl Fn(&mut ChaCha8Rng) -> f64 + Send + Sync + 'static,
        log_ratio: impl Fn(f64) -> f64 + Send + Sync + 'static,
        statistic: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            sample_null: Arc::new(sample_null),
            sample_alt: Arc::new(sample_alt),
            log_ratio: Arc::new(log_ratio),
            statistic: Arc::new(statistic),
            quantile_draws: 200_000,
            stats_draws: 200_000,
            mc_seed: 0x5EED_CAFE,
        }
    }
}

impl fmt::Debug for MlrModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MlrModel")
            .field("label", &self.label)
            .field("quantile_draws", &self.quantile_draws)
            .field("stats_draws", &self.stats_draws)
            .field("mc_seed", &self.mc_seed)
            .finish()
    }
}

/// Concrete family of a pair.
#[derive(Clone)]
pub enum Family {
    /// P0 = N(0, 1), P1 = N(theta, 1), theta > 0.
    GaussianShift { theta: f64 },
    /// P0 = Bernoulli(p0), P1 = Bernoulli(p1), observations in {0, 1}.
    BernoulliPair { p0: f64, p1: f64 },
    /// User-supplied monotone-likelihood-ratio family.
    GeneralMlr(Arc<MlrModel>),
}

/// Tag identifying the family, e.g. for report columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    GaussianShift,
    BernoulliPair,
    GeneralMlr,
}

impl FamilyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyKind::GaussianShift => "gaussian_shift",
            FamilyKind::BernoulliPair => "bernoulli_pair",
            FamilyKind::GeneralMlr => "general_mlr",
        }
    }
}

/// An immutable null/alternative pair, safely shareable across trial workers.
#[derive(Clone)]
pub struct DistributionPair {
    family: Family,
    alt_known: bool,
}

impl fmt::Debug for DistributionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::GaussianShift { theta } => {
                write!(f, "GaussianShift(theta={theta}, alt_known={})", self.alt_known)
            }
            Family::BernoulliPair { p0, p1 } => {
                write!(f, "BernoulliPair(p0={p0}, p1={p1}, alt_known={})", self.alt_known)
            }
            Family::GeneralMlr(m) => {
                write!(f, "GeneralMlr({}, alt_known={})", m.label, self.alt_known)
            }
        }
    }
}

impl DistributionPair {
    /// Gaussian mean-shift pair with the alternative disclosed.
    pub fn gaussian_shift(theta: f64) -> Result<Self, DistributionError> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(DistributionError::InvalidParameter(format!(
                "GaussianShift requires theta > 0, got {theta}"
            )));
        }
        Ok(Self {
            family: Family::GaussianShift { theta },
            alt_known: true,
        })
    }

    /// Bernoulli pair with the alternative disclosed.
    ///
    /// Requires `p1 >= p0` so the count of ones is increasing in the LLR;
    /// `p0 == p1` (no signal) is allowed as a stress case. Endpoint masses
    /// (0 or 1) are allowed for sampling but make the divergences infinite
    /// unless the distributions are identical.
    pub fn bernoulli_pair(p0: f64, p1: f64) -> Result<Self, DistributionError> {
        for (name, p) in [("p0", p0), ("p1", p1)] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(DistributionError::InvalidParameter(format!(
                    "BernoulliPair requires {name} in [0, 1], got {p}"
                )));
            }
        }
        if p1 < p0 {
            return Err(DistributionError::InvalidParameter(format!(
                "BernoulliPair requires p1 >= p0 (statistic oriented toward P1), got p0={p0}, p1={p1}"
            )));
        }
        Ok(Self {
            family: Family::BernoulliPair { p0, p1 },
            alt_known: true,
        })
    }

    /// General MLR pair; defaults to an undisclosed alternative, which is the
    /// situation the escape hatch exists for.
    pub fn general_mlr(model: MlrModel) -> Self {
        Self {
            family: Family::GeneralMlr(Arc::new(model)),
            alt_known: false,
        }
    }

    /// Same pair with the disclosure flag replaced.
    pub fn with_alt_known(mut self, alt_known: bool) -> Self {
        self.alt_known = alt_known;
        self
    }

    pub fn alt_known(&self) -> bool {
        self.alt_known
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn kind(&self) -> FamilyKind {
        match self.family {
            Family::GaussianShift { .. } => FamilyKind::GaussianShift,
            Family::BernoulliPair { .. } => FamilyKind::BernoulliPair,
            Family::GeneralMlr(_) => FamilyKind::GeneralMlr,
        }
    }

    /// Mean shift for the Gaussian family.
    pub fn theta(&self) -> Option<f64> {
        match self.family {
            Family::GaussianShift { theta } => Some(theta),
            _ => None,
        }
    }

    pub fn bernoulli_params(&self) -> Option<(f64, f64)> {
        match self.family {
            Family::BernoulliPair { p0, p1 } => Some((p0, p1)),
            _ => None,
        }
    }

    /// One draw under `hypothesis`.
    pub fn sample_one(&self, hypothesis: Hypothesis, rng: &mut ChaCha8Rng) -> f64 {
        match &self.family {
            Family::GaussianShift { theta } => {
                let z: f64 = rng.sample(StandardNormal);
                match hypothesis {
                    Hypothesis::Null => z,
                    Hypothesis::Alt => theta + z,
                }
            }
            Family::BernoulliPair { p0, p1 } => {
                let p = match hypothesis {
                    Hypothesis::Null => *p0,
                    Hypothesis::Alt => *p1,
                };
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            Family::GeneralMlr(m) => match hypothesis {
                Hypothesis::Null => (m.sample_null)(rng),
                Hypothesis::Alt => (m.sample_alt)(rng),
            },
        }
    }

    /// `count` i.i.d. draws under `hypothesis`; deterministic given `rng`.
    pub fn sample(&self, hypothesis: Hypothesis, count: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..count).map(|_| self.sample_one(hypothesis, rng)).collect()
    }

    /// Single-observation log-likelihood ratio log(P1(y)/P0(y)), unchecked
    /// with respect to `alt_known`. Internal building block for [`llr`] and
    /// for procedures that have already verified disclosure.
    ///
    /// [`llr`]: DistributionPair::llr
    pub(crate) fn llr_term(&self, y: f64) -> f64 {
        match &self.family {
            Family::GaussianShift { theta } => theta * y - theta * theta / 2.0,
            Family::BernoulliPair { p0, p1 } => {
                if p0 == p1 {
                    return 0.0;
                }
                // y outside {0,1} is outside the support; ln of a zero mass
                // yields the appropriate +-inf rather than a panic.
                if y == 1.0 {
                    (p1 / p0).ln()
                } else {
                    ((1.0 - p1) / (1.0 - p0)).ln()
                }
            }
            Family::GeneralMlr(m) => (m.log_ratio)(y),
        }
    }

    /// Log-likelihood ratio of a sample sequence, in nats. Additive over
    /// concatenation; the empty sequence gives 0.
    pub fn llr(&self, observations: &[f64]) -> Result<f64, DistributionError> {
        if !self.alt_known {
            return Err(DistributionError::QueryNotPermitted);
        }
        Ok(observations.iter().map(|&y| self.llr_term(y)).sum())
    }

    /// The monotone scalar statistic of a sample sequence: the sum of
    /// observations for the Gaussian family, the count of ones for the
    /// Bernoulli family, the model's own statistic for the general case.
    /// Computable without any knowledge of the alternative's parameter.
    pub fn test_statistic(&self, observations: &[f64]) -> f64 {
        match &self.family {
            Family::GaussianShift { .. } | Family::BernoulliPair { .. } => {
                observations.iter().sum()
            }
            Family::GeneralMlr(m) => (m.statistic)(observations),
        }
    }

    /// Divergences and null-side LLR variance. Closed form for the Gaussian
    /// and Bernoulli families; seeded Monte Carlo for the general case.
    pub fn llr_stats(&self) -> Result<LlrStats, DistributionError> {
        match &self.family {
            Family::GaussianShift { theta } => {
                let half = theta * theta / 2.0;
                Ok(LlrStats::new(half, half, theta * theta))
            }
            Family::BernoulliPair { p0, p1 } => {
                if p0 == p1 {
                    return Ok(LlrStats::new(0.0, 0.0, 0.0));
                }
                if *p0 <= 0.0 || *p0 >= 1.0 || *p1 <= 0.0 || *p1 >= 1.0 {
                    // distinct endpoint masses do not share support
                    return Err(DistributionError::NonFiniteDivergence);
                }
                let a = (p1 / p0).ln();
                let b = ((1.0 - p1) / (1.0 - p0)).ln();
                let d01 = -(p0 * a + (1.0 - p0) * b);
                let d10 = p1 * a + (1.0 - p1) * b;
                let var01 = p0 * (1.0 - p0) * (a - b) * (a - b);
                Ok(LlrStats::new(d01, d10, var01))
            }
            Family::GeneralMlr(m) => {
                let n = m.stats_draws;
                let mut rng = mc_rng(m.mc_seed, 0x57A7);
                let mut sum0 = 0.0;
                let mut sumsq0 = 0.0;
                for _ in 0..n {
                    let l = (m.log_ratio)((m.sample_null)(&mut rng));
                    sum0 += l;
                    sumsq0 += l * l;
                }
                let mean0 = sum0 / n as f64;
                let var01 = (sumsq0 - sum0 * mean0) / (n as f64 - 1.0);
                let mut sum1 = 0.0;
                for _ in 0..n {
                    sum1 += (m.log_ratio)((m.sample_alt)(&mut rng));
                }
                let d01 = -mean0;
                let d10 = sum1 / n as f64;
                if !d01.is_finite() || !d10.is_finite() || !var01.is_finite() {
                    return Err(DistributionError::NonFiniteDivergence);
                }
                Ok(LlrStats::new(d01, d10, var01.max(0.0)))
            }
        }
    }

    /// Smallest `gamma` with `P(T^(sample_count) <= gamma | null) >= rho`.
    ///
    /// Analytic for the Gaussian family, discrete search for the Bernoulli
    /// family (ties resolved to the smallest attaining value), and the
    /// empirical quantile of `quantile_draws` seeded null statistics for the
    /// general family (probability resolution `1/quantile_draws`).
    pub fn null_quantile(&self, sample_count: u64, rho: f64) -> Result<f64, DistributionError> {
        if sample_count == 0 {
            return Err(DistributionError::InvalidParameter(
                "null_quantile requires sample_count >= 1".into(),
            ));
        }
        if !(0.5..1.0).contains(&rho) {
            return Err(DistributionError::InvalidParameter(format!(
                "null_quantile requires rho in [1/2, 1), got {rho}"
            )));
        }
        match &self.family {
            Family::GaussianShift { .. } => {
                let sd = (sample_count as f64).sqrt();
                let normal = Normal::new(0.0, sd).expect("valid normal");
                Ok(normal.inverse_cdf(rho))
            }
            Family::BernoulliPair { p0, .. } => {
                Ok(bernoulli_null_quantile(*p0, sample_count, rho) as f64)
            }
            Family::GeneralMlr(m) => {
                let draws = m.quantile_draws.max(1);
                let mut rng = mc_rng(m.mc_seed, mix64(sample_count));
                let mut stats = Vec::with_capacity(draws);
                let mut obs = vec![0.0; sample_count as usize];
                for _ in 0..draws {
                    for slot in obs.iter_mut() {
                        *slot = (m.sample_null)(&mut rng);
                    }
                    stats.push((m.statistic)(&obs));
                }
                stats.sort_by(f64::total_cmp);
                // smallest order statistic whose empirical CDF reaches rho
                let k = (rho * draws as f64).ceil() as usize;
                Ok(stats[k.clamp(1, draws) - 1])
            }
        }
    }
}

fn mc_rng(seed: u64, domain: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    // SUPPORT_COMPONENT keeps model-internal estimation streams disjoint from
    // any component stream an experiment might derive from the same seed.
    ChaCha8Rng::seed_from_u64(mix64(mix64(seed ^ SUPPORT_COMPONENT) ^ domain))
}

/// Smallest integer `t` with `P(Binomial(sample_count, p0) <= t) >= rho`.
///
/// The CDF is summed directly (exact dyadic arithmetic for p0 = 1/2); values
/// within 1e-12 of `rho` count as attaining it so exact rational boundaries
/// such as CDF(1) = 3/4 at rho = 0.75 are not lost to rounding.
fn bernoulli_null_quantile(p0: f64, sample_count: u64, rho: f64) -> u64 {
    const TIE_EPS: f64 = 1e-12;
    if p0 <= 0.0 {
        return 0;
    }
    if p0 >= 1.0 {
        return sample_count;
    }
    let n = sample_count;
    if n <= 10_000 {
        // pmf recurrence in log space to survive large n
        let mut log_pmf = (n as f64) * (1.0 - p0).ln();
        let ratio = (p0 / (1.0 - p0)).ln();
        let mut cdf = log_pmf.exp();
        let mut t = 0u64;
        while t < n && cdf + TIE_EPS < rho {
            log_pmf += ((n - t) as f64).ln() - ((t + 1) as f64).ln() + ratio;
            cdf += log_pmf.exp();
            t += 1;
        }
        t
    } else {
        // normal approximation bracket, then exact refinement, for very
        // large per-step sample counts
        let mean = n as f64 * p0;
        let sd = (n as f64 * p0 * (1.0 - p0)).sqrt();
        let normal = Normal::new(0.0, 1.0).expect("valid normal");
        let guess = (mean + sd * normal.inverse_cdf(rho)).floor().max(0.0) as u64;
        let lo = guess.saturating_sub(20 + (sd as u64));
        let mut t = lo;
        let mut cdf = if lo == 0 {
            0.0
        } else {
            binomial_cdf(p0, n, lo - 1)
        };
        loop {
            cdf += binomial_pmf(p0, n, t);
            if cdf + TIE_EPS >= rho || t >= n {
                return t;
            }
            t += 1;
        }
    }
}

fn binomial_pmf(p: f64, n: u64, k: u64) -> f64 {
    (ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
}

fn binomial_cdf(p: f64, n: u64, k: u64) -> f64 {
    if k >= n {
        return 1.0;
    }
    (0..=k).map(|j| binomial_pmf(p, n, j)).sum()
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn ln_factorial(n: u64) -> f64 {
    statrs::function::gamma::ln_gamma(n as f64 + 1.0)
}
